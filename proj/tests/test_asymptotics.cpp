#include "doctest.h"
#include "relax/asymptotics.hpp"
#include "relax/profile.hpp"

#include <cmath>
#include <random>

using namespace relax;

TEST_CASE("sylvester scalar and componentwise") {
  auto r = sylvester(Mat::Constant(1, 1, 2.0), Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 3.0));
  CHECK(r.X(0, 0) == doctest::Approx(3.0));
  Mat d1 = Mat::Zero(2, 2);
  d1.diagonal() << 1.0, 2.0;
  Mat F(2, 1);
  F << 1.0, 1.0;
  auto r2 = sylvester(d1, Mat::Constant(1, 1, 3.0), F);
  CHECK(r2.X(0, 0) == doctest::Approx(-0.5));
  CHECK(r2.X(1, 0) == doctest::Approx(-1.0));
}

TEST_CASE("sylvester random residual") {
  std::mt19937 rng(11);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Mat d1(4, 4), d2(3, 3), F(4, 3);
    for (auto* m : {&d1, &d2, &F})
      for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = N(rng);
    d1.diagonal().array() += 6.0;
    d2.diagonal().array() -= 6.0;
    auto r = sylvester(d1, d2, F);
    CHECK(r.residual <= 1e-12 * (1.0 + F.norm()));
    CHECK(r.X.norm() <= r.bound * F.norm() * (1 + 1e-12));
  }
}

TEST_CASE("sylvester refuses overlapping spectra") {
  CHECK_THROWS_AS(sylvester(Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 1.0)),
                  RelaxError);
}

namespace {

Mat rot(double t) {
  Mat R(2, 2);
  R << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return R;
}

Mat rotated_diag(double x) {
  Mat D = Mat::Zero(2, 2);
  D.diagonal() << 1.0, -1.0;
  const Mat R = rot(0.3 * std::tanh(x));
  return R * D * R.transpose();
}

}  // namespace

TEST_CASE("goodman frame for a constant matrix") {
  Mat A(2, 2);
  A << 0, 1, 4, 0;
  auto fr = goodman_frame([&](double) { return A; }, linspace(-2.0, 2.0, 41));
  CHECK(fr.max_LRprime < 1e-12);
  CHECK((fr.T(0) - fr.T(40)).norm() < 1e-12);
}

TEST_CASE("goodman frame for a rotating eigenbasis") {
  auto fr = goodman_frame(rotated_diag, linspace(-6.0, 6.0, 1201));
  CHECK(fr.relative_LRprime <= 1e-8);
  CHECK(fr.max_LR_identity_error <= 1e-10);
  CHECK(fr.max_Rprime > 0.01);
  MESSAGE("naive frame max |L R'| = " << fr.naive_max_LRprime);
}

TEST_CASE("block diagonalization of the high-frequency jin-xin system") {
  Mat A(2, 2);
  A << 0, 1, 4, 0;
  const Mat Ai = A.inverse();
  auto Q = [](double x) {
    Mat q = Mat::Zero(2, 2);
    q(1, 0) = -std::tanh(x / 8.0);
    q(1, 1) = -1.0;
    return q;
  };
  auto A0 = [&](double) { return Mat(-Ai); };
  auto x = linspace(-10.0, 10.0, 2001);
  auto fr = goodman_frame(A0, x);

  // frozen at u- = 1
  auto A1c = [&](double) {
    Mat q = Mat::Zero(2, 2);
    q(1, 0) = 1.0;
    q(1, 1) = -1.0;
    return Mat(Ai * q);
  };
  auto st = block_diagonalize(A0, A1c, 0.1, fr);
  // blocks ordered by ascending eigenvalue of A0 = -A^{-1}: family +2 (eig -1/2) first
  CHECK(st.D1[0](0, 0) == doctest::Approx(-0.125));
  CHECK(st.D1[0](1, 1) == doctest::Approx(0.375));

  auto A1 = [&](double xx) { return Mat(Ai * Q(xx)); };
  auto s1 = block_diagonalize(A0, A1, 0.1, fr);
  auto s2 = block_diagonalize(A0, A1, 0.05, fr);
  const double ratio = s1.offdiag_residual / s2.offdiag_residual;
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);

  auto s0 = block_diagonalize(A0, [](double) { return Mat(Mat::Zero(2, 2)); }, 0.1, fr);
  CHECK(s0.T1[100].norm() < 1e-12);
  CHECK(s0.D1[100].norm() < 1e-12);
}

TEST_CASE("gap basis with constant coefficients") {
  CMat Am(2, 2);
  Am << 1.0, 0.0, 0.0, -1.0;
  CVec V(2);
  V << 1.0, 0.0;
  GapOptions o;
  o.alpha = 0.5;
  auto g = gap_basis([&](double) { return Am; }, Am, 1.0, V, o);
  CHECK(g.iterations == 1);
  for (const auto& v : g.V) CHECK((v - V).norm() < 1e-12);
}

TEST_CASE("gap basis for the jin-xin eigenvalue ODE") {
  auto m = make_jin_xin(1, 2.0, {0.0, 0.0, 0.5});
  const cplx lambda = 0.5;
  Mat A(2, 2);
  A << 0, 1, 4, 0;
  const CMat Ai = A.inverse().cast<cplx>();
  auto coeff = [&](double x) {
    CMat q = CMat::Zero(2, 2);
    q(1, 0) = -std::tanh(x / 8.0);
    q(1, 1) = -1.0;
    return CMat(Ai * (q - lambda * CMat::Identity(2, 2)));
  };
  CMat Am = coeff(-1e4);
  auto eig = complex_eigen(Am);
  int iu = eig.values(0).real() > eig.values(1).real() ? 0 : 1;
  GapOptions o;
  o.alpha = 0.25;
  auto g = gap_basis(coeff, Am, eig.values(iu), eig.right.col(iu), o, lambda);

  // geometric convergence
  for (std::size_t i = 1; i + 1 < g.history.size(); ++i) {
    if (g.history[i] > 1e-13) CHECK(g.history[i] / g.history[i - 1] <= 0.5);
  }
  CHECK(g.ode_residual <= 1e-8);

  // direct RK4 seeded far to the left, normalised at -M
  const cplx mu = g.mu;
  auto rhs = [&](double x, const CVec& v) { return CVec((coeff(x) - mu * CMat::Identity(2, 2)) * v); };
  CVec v = g.V_minus;
  double xx = g.x.front();
  std::vector<CVec> direct(g.x.size());
  direct[0] = v;
  for (std::size_t k = 1; k < g.x.size(); ++k) {
    const double h = g.x[k] - g.x[k - 1];
    for (int sub = 0; sub < 2; ++sub) {
      const double hs = 0.5 * h;
      const CVec k1 = rhs(xx, v), k2 = rhs(xx + 0.5 * hs, v + 0.5 * hs * k1), k3 = rhs(xx + 0.5 * hs, v + 0.5 * hs * k2),
                 k4 = rhs(xx + hs, v + hs * k3);
      v += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      xx += hs;
    }
    direct[k] = v;
  }
  const int km = g.index_minus_M;
  const cplx scale = g.V[km].dot(direct[km]) / direct[km].squaredNorm();
  double err = 0.0;
  for (std::size_t k = km; k < g.x.size(); ++k) err = std::max(err, (g.V[k] - scale * direct[k]).norm());
  CHECK(err <= 1e-6);

  // |V - V-| decays like e^{alpha x}
  std::vector<double> xs, ys;
  for (int k = 0; k <= km; k += 100) {
    const double d = (g.V[k] - g.V_minus).norm();
    if (d > 1e-13 && g.x[k] > -60.0) {
      xs.push_back(g.x[k]);
      ys.push_back(std::log(d));
    }
  }
  CHECK(fit_line(xs, ys).slope >= 0.9 * 0.25);
}

TEST_CASE("reduced flow scalar closed form") {
  auto M = [](double) { return Mat::Constant(1, 1, -1.0); };
  auto Th = [](double) { return Mat::Constant(1, 1, 1.0); };
  auto r = reduced_flow_first_order(M, Th, 0.1, 1.0, 0.0, 2.0);
  CHECK(r.E(0, 0) == doctest::Approx(2.0 * std::exp(-2.0)).epsilon(1e-8));
  CHECK(r.Fbar(0, 0) == doctest::Approx(1.2 * std::exp(-2.0)).epsilon(1e-8));
  CHECK(r.direct(0, 0) == doctest::Approx(std::exp(-1.8)).epsilon(1e-10));
  CHECK(r.error == doctest::Approx(0.00284).epsilon(0.02));

  auto z = reduced_flow_first_order(M, [](double) { return Mat::Constant(1, 1, 0.0); }, 0.1, 1.0, 0.0, 2.0);
  CHECK(z.Fbar(0, 0) == doctest::Approx(std::exp(-2.0)));
}

TEST_CASE("reduced flow error order") {
  auto M = [](double x) {
    Mat m(2, 2);
    m << -1.0 - 0.3 * std::tanh(x), 0.2, 0.0, -2.0;
    return m;
  };
  auto Th = [](double x) {
    Mat t(2, 2);
    t << std::cos(x), 0.5, -0.3, 1.0;
    return t;
  };
  std::vector<double> ld, le;
  for (double d : {0.1, 0.05, 0.025}) {
    auto r = reduced_flow_first_order(M, Th, d, 1.0, -1.0, 2.0);
    ld.push_back(std::log(d));
    le.push_back(std::log(r.error));
  }
  CHECK(fit_line(ld, le).slope >= 1.8);
}

TEST_CASE("reduced flow correction decay") {
  auto M = [](double) { return Mat::Constant(1, 1, -1.0); };
  auto Th = [](double) { return Mat::Constant(1, 1, 1.0); };
  for (double x : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    auto r = reduced_flow_first_order(M, Th, 0.1, 1.0, 0.0, x);
    CHECK(std::abs(r.E(0, 0)) <= 1.0001 * x * std::exp(-x));
  }
}

TEST_CASE("reduced flow precondition") {
  auto M = [](double) { return Mat::Constant(1, 1, 1.0); };
  auto Th = [](double) { return Mat::Constant(1, 1, 1.0); };
  CHECK_THROWS_AS(reduced_flow_first_order(M, Th, 0.1, 1.0, 0.0, 5.0), RelaxError);
}

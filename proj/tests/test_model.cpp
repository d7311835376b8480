#include "doctest.h"
#include "relax/model.hpp"

#include <random>

using namespace relax;

namespace {

RelaxationModel burgers_jx() { return make_jin_xin(1, 2.0, {0.0, 0.0, 0.5}); }

ShockData burgers_shock(const RelaxationModel& m) {
  return make_shock(m, Vec::Constant(1, 1.0), Vec::Constant(1, -1.0), 0.0);
}

// quadratic test system with n = 1, r = 2
RelaxationModel quadratic_model(bool analytic) {
  RelaxationModel m;
  m.n = 1;
  m.r = 2;
  m.f = [](const Vec& u, const Vec& v) { return Vec::Constant(1, v(0) + 0.3 * v(1) + 0.1 * u(0) * u(0)); };
  m.g = [](const Vec& u, const Vec& v) {
    Vec g(2);
    g << 3.0 * u(0) + 0.2 * v(0) * v(1), 2.0 * u(0) - 0.5 * v(1) * v(1);
    return g;
  };
  m.q = [](const Vec& u, const Vec& v) {
    Vec q(2);
    q << 0.5 * u(0) * u(0) - v(0), u(0) - 2.0 * v(1) + 0.1 * v(0) * v(0);
    return q;
  };
  m.v_star = [](const Vec& u) {
    Vec v(2);
    v(0) = 0.5 * u(0) * u(0);
    v(1) = 0.5 * (u(0) + 0.1 * v(0) * v(0));
    return v;
  };
  if (analytic) {
    m.f_u = [](const Vec& u, const Vec&) { return Mat::Constant(1, 1, 0.2 * u(0)); };
    m.f_v = [](const Vec&, const Vec&) {
      Mat J(1, 2);
      J << 1.0, 0.3;
      return J;
    };
    m.g_u = [](const Vec&, const Vec&) {
      Mat J(2, 1);
      J << 3.0, 2.0;
      return J;
    };
    m.g_v = [](const Vec&, const Vec& v) {
      Mat J(2, 2);
      J << 0.2 * v(1), 0.2 * v(0), 0.0, -v(1);
      return J;
    };
    m.q_u = [](const Vec& u, const Vec&) {
      Mat J(2, 1);
      J << u(0), 1.0;
      return J;
    };
    m.q_v = [](const Vec&, const Vec& v) {
      Mat J(2, 2);
      J << -1.0, 0.0, 0.2 * v(0), -2.0;
      return J;
    };
  }
  return m;
}

}  // namespace

TEST_CASE("jin-xin jacobians") {
  auto m = burgers_jx();
  auto c = jacobians(m, Vec::Constant(1, 1.0), Vec::Constant(1, 0.5));
  Mat A(2, 2), Q(2, 2);
  A << 0, 1, 4, 0;
  Q << 0, 0, 1, -1;
  CHECK((c.A - A).norm() == doctest::Approx(0.0));
  CHECK((c.Q - Q).norm() == doctest::Approx(0.0));
}

TEST_CASE("linear relaxation block of Q") {
  RelaxationModel m;
  m.n = 1;
  m.r = 1;
  m.f = [](const Vec&, const Vec& v) { return v; };
  m.g = [](const Vec& u, const Vec&) { return Vec(u); };
  m.q = [](const Vec& u, const Vec& v) { return Vec(0.7 * u - v); };
  m.v_star = [](const Vec& u) { return Vec(0.7 * u); };
  auto c = jacobians(m, Vec::Zero(1), Vec::Zero(1));
  CHECK(c.Q(1, 0) == doctest::Approx(0.7));
  CHECK(c.Q(1, 1) == doctest::Approx(-1.0));
  CHECK(c.Q.row(0).norm() == 0.0);
}

TEST_CASE("analytic jacobians agree with finite differences") {
  auto ma = quadratic_model(true);
  auto mf = quadratic_model(false);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-0.5, 0.5);
  for (int trial = 0; trial < 10; ++trial) {
    Vec u(1), v(2);
    u << U(rng);
    v << U(rng), U(rng);
    auto ja = state_jacobians(ma, u, v);
    auto jf = state_jacobians(mf, u, v);
    auto rel = [](const Mat& a, const Mat& b) { return (a - b).norm() / (1.0 + a.norm()); };
    CHECK(rel(ja.f_u, jf.f_u) < 1e-6);
    CHECK(rel(ja.f_v, jf.f_v) < 1e-6);
    CHECK(rel(ja.g_u, jf.g_u) < 1e-6);
    CHECK(rel(ja.g_v, jf.g_v) < 1e-6);
    CHECK(rel(ja.q_u, jf.q_u) < 1e-6);
    CHECK(rel(ja.q_v, jf.q_v) < 1e-6);
  }
}

TEST_CASE("complex frozen speeds are rejected") {
  RelaxationModel m;
  m.n = 1;
  m.r = 1;
  m.f = [](const Vec&, const Vec& v) { return v; };
  m.g = [](const Vec& u, const Vec&) { return Vec(-u); };
  m.q = [](const Vec& u, const Vec& v) { return Vec(u - v); };
  m.v_star = [](const Vec& u) { return u; };
  try {
    jacobians(m, Vec::Zero(1), Vec::Zero(1));
    FAIL("expected an exception");
  } catch (const RelaxError& e) {
    CHECK(e.kind() == ErrorKind::NonHyperbolic);
  }
}

TEST_CASE("equilibrium data") {
  auto m = burgers_jx();
  auto e = equilibrium_data(m, Vec::Constant(1, 1.0));
  CHECK(e.f_star(0) == doctest::Approx(0.5));
  CHECK(e.speeds(0) == doctest::Approx(1.0));
  CHECK(std::abs(e.right(0, 0)) == doctest::Approx(1.0));
  CHECK(e.left(0, 0) * e.right(0, 0) == doctest::Approx(1.0));
  CHECK(equilibrium_data(m, Vec::Zero(1)).speeds(0) == doctest::Approx(0.0));

  // custom two-component equilibrium flux with known spectrum {-1, 3}
  RelaxationModel c;
  c.n = 2;
  c.r = 2;
  Mat K(2, 2);
  K << 1, 2, 2, 1;
  c.f = [](const Vec&, const Vec& v) { return v; };
  c.g = [](const Vec& u, const Vec&) { return Vec(16.0 * u); };
  c.q = [K](const Vec& u, const Vec& v) { return Vec(K * u - v); };
  c.v_star = [K](const Vec& u) { return Vec(K * u); };
  auto ec = equilibrium_data(c, Vec::Zero(2));
  CHECK(ec.speeds(0) == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(ec.speeds(1) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK((ec.left * ec.right - Mat::Identity(2, 2)).norm() < 1e-10);
}

TEST_CASE("chapman-enskog diffusion") {
  auto m = burgers_jx();
  for (double u : {1.0, -1.0}) {
    auto ce = chapman_enskog(m, Vec::Constant(1, u));
    CHECK(ce.B(0, 0) == doctest::Approx(3.0));
    CHECK(ce.beta_diag(0) == doctest::Approx(3.0));
  }
  CHECK(chapman_enskog(m, Vec::Zero(1)).B(0, 0) == doctest::Approx(4.0));
}

TEST_CASE("chapman-enskog matches slow dispersion branch") {
  auto m = burgers_jx();
  auto sh = burgers_shock(m);
  // slow branch: lambda = -i a* xi - beta xi^2 + O(xi^3)
  std::vector<double> xs, ys;
  for (double xi : logspace(1e-3, 1e-1, 12)) {
    CVec ev = dispersion_exact(m, sh, Side::Minus, xi);
    cplx slow = std::abs(ev(0)) < std::abs(ev(1)) ? ev(0) : ev(1);
    xs.push_back(xi * xi);
    ys.push_back(-slow.real());
  }
  // fit beta from the smallest xi (higher order terms are O(xi^4) in the real part)
  const double beta = ys.front() / xs.front();
  CHECK(beta == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("frozen modes and dissipation rates") {
  auto m = burgers_jx();
  auto cm = hyperbolic_modes(m, Vec::Constant(1, 1.0), Vec::Constant(1, 0.5), 0.0);
  REQUIRE(cm.family_count() == 2);
  CHECK(cm.speed[0] == doctest::Approx(-2.0));
  CHECK(cm.speed[1] == doctest::Approx(2.0));
  CHECK(cm.eta[0](0, 0) == doctest::Approx(0.75));
  CHECK(cm.eta[1](0, 0) == doctest::Approx(0.25));
  Mat sum = Mat::Zero(2, 2);
  for (int j = 0; j < 2; ++j) {
    for (int k = 0; k < 2; ++k) {
      Mat lr = cm.left[j] * cm.right[k];
      Mat expect = Mat::Constant(1, 1, j == k ? 1.0 : 0.0);
      CHECK((lr - expect).norm() < 1e-10);
    }
    sum += cm.right[j] * cm.left[j];
  }
  CHECK((sum - Mat::Identity(2, 2)).norm() < 1e-10);

  auto c0 = hyperbolic_modes(m, Vec::Zero(1), Vec::Zero(1), 0.0);
  CHECK(c0.eta[0](0, 0) == doctest::Approx(0.5));
  CHECK(c0.eta[1](0, 0) == doctest::Approx(0.5));

  // diag of L (Q A^{-1}) R equals -eta_j / a_j
  auto c = jacobians(m, Vec::Constant(1, 1.0), Vec::Constant(1, 0.5));
  Mat QAi = c.Q * c.A.inverse();
  CHECK((cm.left[0] * QAi * cm.right[0])(0, 0) == doctest::Approx(0.375));
  CHECK((cm.left[1] * QAi * cm.right[1])(0, 0) == doctest::Approx(-0.125));
}

TEST_CASE("repeated frozen speeds are grouped") {
  Mat A = Mat::Zero(3, 3);
  A.diagonal() << 1.0, 1.0 + 1e-12, -2.0;
  Mat Q = -Mat::Identity(3, 3);
  auto cm = hyperbolic_modes(A, Q);
  REQUIRE(cm.family_count() == 2);
  CHECK(cm.multiplicity[0] == 1);
  CHECK(cm.multiplicity[1] == 2);
  CHECK(cm.eta[1].rows() == 2);
}

TEST_CASE("lifted equilibrium modes") {
  auto m = burgers_jx();
  auto md = mode_data(m, Vec::Constant(1, 1.0));
  // R* = (r*; -q_v^{-1} q_u r*) = (r*; dh r*)
  CHECK(md.R_star(1, 0) == doctest::Approx(md.R_star(0, 0)));
  CHECK(md.L_star(0, 1) == 0.0);
  CHECK((md.L_star * md.R_star)(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("hypothesis report for the burgers shock") {
  auto m = burgers_jx();
  auto rep = check_hypotheses(m, burgers_shock(m));
  CHECK(rep.h1_constant_multiplicity);
  CHECK(rep.h2_equilibrium_hyperbolic);
  CHECK(rep.h2_noncharacteristic);
  CHECK(rep.h3_dissipative);
  CHECK(rep.theta_est >= 0.15);
  CHECK(rep.theta_est <= 0.30);
  CHECK(rep.eta_positive);
  CHECK(rep.beta_positive);
  REQUIRE(rep.subcharacteristic.has_value());
  CHECK(*rep.subcharacteristic);
  CHECK(rep.all_pass());
}

TEST_CASE("subcharacteristic boundary case fails") {
  auto m = make_jin_xin(1, 1.0, {0.0, 0.0, 0.5});
  // u = +-1 has dh = +-1 = a: speed is characteristic, so bypass make_shock
  ShockData sh;
  sh.u_minus = Vec::Constant(1, 1.0);
  sh.u_plus = Vec::Constant(1, -1.0);
  sh.v_minus = sh.v_plus = Vec::Constant(1, 0.5);
  sh.s = 0.0;
  auto rep = check_hypotheses(m, sh);
  REQUIRE(rep.subcharacteristic.has_value());
  CHECK_FALSE(*rep.subcharacteristic);
  CHECK_FALSE(rep.all_pass());
}

TEST_CASE("dissipativity grid skips xi = 0") {
  Mat A(2, 2), Q(2, 2);
  A << 0, 1, 4, 0;
  Q << 0, 0, 1, -1;
  const double theta = dissipativity_constant(A, Q, {0.0, 1.0});
  CHECK(std::isfinite(theta));
}

TEST_CASE("dispersion relation") {
  auto m = burgers_jx();
  auto sh = burgers_shock(m);
  CVec ev0 = dispersion_exact(m, sh, Side::Minus, 0.0);
  CHECK(std::abs(ev0(0)) < 1e-12);
  CHECK(std::abs(ev0(1) + 1.0) < 1e-12);

  // slow branch residual is third order
  std::vector<double> lx, ly;
  for (double xi : logspace(1e-3, 1e-1, 9)) {
    CVec ev = dispersion_exact(m, sh, Side::Minus, xi);
    cplx slow = std::abs(ev(0)) < std::abs(ev(1)) ? ev(0) : ev(1);
    lx.push_back(std::log(xi));
    ly.push_back(std::log(std::abs(slow + cplx(0, 1) * xi + 3.0 * xi * xi)));
  }
  CHECK(fit_line(lx, ly).slope >= 2.7);

  // high frequency limits -eta
  CVec big = dispersion_exact(m, sh, Side::Minus, 1e3);
  std::vector<double> re = {big(0).real(), big(1).real()};
  std::sort(re.begin(), re.end());
  CHECK(re[0] == doctest::Approx(-0.75).epsilon(1e-3));
  CHECK(re[1] == doctest::Approx(-0.25).epsilon(1e-3));
}

TEST_CASE("dispersion sweep keeps branches continuous") {
  auto m = burgers_jx();
  auto sh = burgers_shock(m);
  auto xs = linspace(0.0, 5.0, 200);
  auto sweep = dispersion_sweep(m, sh, Side::Minus, xs);
  for (std::size_t k = 1; k < sweep.size(); ++k) {
    for (Eigen::Index j = 0; j < 2; ++j) CHECK(std::abs(sweep[k](j) - sweep[k - 1](j)) < 0.2);
  }
}

TEST_CASE("shock validation") {
  auto m = burgers_jx();
  CHECK_NOTHROW(burgers_shock(m));
  CHECK_THROWS_AS(make_shock(m, Vec::Constant(1, 1.0), Vec::Constant(1, -1.0), 0.3), RelaxError);
  CHECK(rankine_hugoniot_speed(m, Vec::Constant(1, 2.0), Vec::Constant(1, 0.0)) == doctest::Approx(1.0));
}

TEST_CASE("reduced traveling-wave matrix") {
  auto m = burgers_jx();
  auto M = reduced_traveling_wave_matrix(m, Vec::Constant(1, 1.0), Vec::Constant(1, 0.5), 0.0);
  CHECK(M(0, 0) == doctest::Approx(0.25));
  auto Mp = reduced_traveling_wave_matrix(m, Vec::Constant(1, -1.0), Vec::Constant(1, 0.5), 0.0);
  CHECK(Mp(0, 0) == doctest::Approx(-0.25));
}

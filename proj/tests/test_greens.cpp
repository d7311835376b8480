#include "doctest.h"
#include "relax/greens.hpp"
#include "relax/simulate.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace relax;

namespace {

RelaxationModel burgers_jx() { return make_jin_xin(1, 2.0, {0.0, 0.0, 0.5}); }

const ShockProfile& burgers_profile() {
  static const ShockProfile p = [] {
    auto m = burgers_jx();
    return solve_profile(m, make_shock(m, Vec::Constant(1, 1.0), Vec::Constant(1, -1.0), 0.0));
  }();
  return p;
}

const ScatteringTable& burgers_table() {
  static const ScatteringTable t = scattering_solve(burgers_profile());
  return t;
}

double bump(double y, double c, double w) {
  const double z = (y - c) / w;
  return std::abs(z) < 1.0 ? std::pow(1.0 - z * z, 4) : 0.0;
}

// closed-form time average of (2 + tanh(z/8)) / 4 along z = y + 2 s
double eta_bar_plus(double y, double t) {
  const double I = 4.0 * (std::log(std::cosh((y + 2.0 * t) / 8.0)) - std::log(std::cosh(y / 8.0)));
  return (2.0 * t + I) / (4.0 * t);
}

}  // namespace

TEST_CASE("errfn") {
  CHECK(errfn(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  for (double z : {0.1, 0.7, 1.3, 2.9, 5.0}) CHECK(std::abs(errfn(z) + errfn(-z) - 1.0) <= 1e-12);
  // Simpson quadrature of the defining integral
  const int n = 20000;
  const double a = -12.0, b = 1.0, h = (b - a) / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * std::exp(-std::pow(a + i * h, 2));
  }
  s *= h / 3.0 / std::sqrt(std::numbers::pi);
  CHECK(errfn(1.0) == doctest::Approx(s).epsilon(1e-10));
  CHECK(errfn(1.0) == doctest::Approx(0.921350).epsilon(1e-6));
  CHECK(errfn(-40.0) == 0.0);
  CHECK(errfn(40.0) == 1.0);
}

TEST_CASE("characteristic path in the far field") {
  const auto& p = burgers_profile();
  const auto cp = characteristic_path(p, 1, -50.0, 1.0);
  CHECK(cp.z == doctest::Approx(-48.0).epsilon(1e-12));
  CHECK(std::abs(cp.eta_bar(0, 0) - eta_bar_plus(-50.0, 1.0)) <= 1e-8);
  CHECK(cp.eta_bar(0, 0) == doctest::Approx(0.25).epsilon(1e-4));
  CHECK(std::abs(cp.zeta(0, 0) - std::exp(-eta_bar_plus(-50.0, 1.0))) <= 1e-6);
  CHECK(std::abs(cp.zeta(0, 0) - 0.7788) <= 1e-4);

  const auto back = characteristic_path(p, 0, 10.0, 3.0);
  CHECK(back.z == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(back.a_bar == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("characteristic amplitude decays at the minimal dissipation rate") {
  const auto& p = burgers_profile();
  for (int j : {0, 1})
    for (double y : {-20.0, -3.0, 5.0}) {
      const double t = 15.0;
      const auto cp = characteristic_path(p, j, y, t);
      CHECK(cp.eta_min > 0.0);
      CHECK(std::abs(cp.zeta(0, 0)) <= std::exp(-0.9 * cp.eta_min * t));
    }
  // the path crossing the layer sees the dissipation change
  const auto cross = characteristic_path(p, 1, -20.0, 20.0);
  CHECK(cross.eta_bar(0, 0) > 0.3);
  CHECK(cross.eta_bar(0, 0) < 0.75);
}

TEST_CASE("H at t = 0 is the identity") {
  const auto& p = burgers_profile();
  std::mt19937 rng(7);
  std::normal_distribution<double> nd;
  Mat f(2, p.size());
  for (int k = 0; k < p.size(); ++k) f.col(k) << nd(rng), nd(rng);
  const Mat h = H_apply(p, f, 0.0);
  CHECK((h - f).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("H transports along characteristics with path damping") {
  const auto& p = burgers_profile();
  Mat f = Mat::Zero(2, p.size());
  for (int k = 0; k < p.size(); ++k) f.col(k) << bump(p.x[k], -50.0, 1.0), 0.3 * bump(p.x[k], -50.0, 1.0);
  const Mat h = H_apply(p, f, 1.0);
  const int i = static_cast<int>(std::lround((-48.0 + p.X) / p.dx));
  const int j = static_cast<int>(std::lround((-50.0 + p.X) / p.dx));
  // right/left eigenvectors of A for speed +2: r = (1, 2), l = (1/2, 1/4)
  Mat rl(2, 2);
  rl << 0.5, 0.25, 1.0, 0.5;
  const Vec exact = std::exp(-eta_bar_plus(-50.0, 1.0)) * rl * f.col(j);
  CHECK((h.col(i) - exact).norm() <= 1e-6);
  const Vec frozen = std::exp(-0.25) * rl * f.col(j);
  CHECK((h.col(i) - frozen).norm() <= 1e-5);
}

TEST_CASE("H support is the hyperbolic domain of influence") {
  const auto& p = burgers_profile();
  Mat f = Mat::Zero(2, p.size());
  for (int k = 0; k < p.size(); ++k) f(0, k) = bump(p.x[k], -10.0, 1.0);
  for (double t : {2.0, 5.0, 12.0}) {
    const Mat h = H_apply(p, f, t);
    const double lo = -11.0 - 2.0 * t, hi = -9.0 + 2.0 * t;
    double outside = 0.0, near_lo = 0.0, near_hi = 0.0;
    for (int k = 0; k < p.size(); ++k) {
      const double x = p.x[k], a = h.col(k).norm();
      if (x < lo - 1e-9 || x > hi + 1e-9) outside = std::max(outside, a);
      if (std::abs(x - (-10.0 - 2.0 * t)) < 0.5) near_lo = std::max(near_lo, a);
      if (std::abs(x - (-10.0 + 2.0 * t)) < 0.5) near_hi = std::max(near_hi, a);
    }
    CHECK(outside == 0.0);
    CHECK(near_lo > 0.0);
    CHECK(near_hi > 0.0);
  }
}

TEST_CASE("scattering table") {
  const auto& tab = burgers_table();
  REQUIRE(tab.entries.size() == 2);
  for (const auto& e : tab.entries) {
    CHECK(e.c0 == 0.5);
    CHECK(e.c_minus.empty());
    CHECK(e.c_plus.empty());
    CHECK(e.residual <= 1e-10);
  }
  CHECK(tab.out_minus.empty());
  CHECK(tab.out_plus.empty());
  CHECK(tab.pi(0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(tab.pi(1)) <= 1e-14);
  CHECK(tab.pi_consistency <= 1e-10);
  CHECK(std::abs(tab.delta) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(tab.delta * tab.permutation_sign == doctest::Approx(tab.liu_majda));
  // the truncated quadrature of dU/d delta agrees with the exact mass
  CHECK(tab.ubar_prime_mass(0) == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("scattering fails without a shock") {
  auto m = burgers_jx();
  const auto cs = constant_state_profile(m, Vec::Constant(1, 1.0), 0.0, 20.0, 0.05);
  try {
    scattering_solve(cs);
    FAIL("expected a failure");
  } catch (const RelaxError& e) {
    CHECK(e.kind() == ErrorKind::Degenerate);
    CHECK(std::string(e.what()).find("(D2)") != std::string::npos);
  }
}

TEST_CASE("excited term limits") {
  const auto& p = burgers_profile();
  const auto& tab = burgers_table();
  // ubar'(0) = -1/8
  CHECK(E_eval(p, tab, 0.0, 1e5, -3.0)(0, 0) == doctest::Approx(0.0625).epsilon(1e-6));
  CHECK(E_eval(p, tab, 0.0, 1e5, 3.0)(0, 0) == doctest::Approx(0.0625).epsilon(1e-6));
  CHECK(std::abs(E_eval(p, tab, 0.0, 1e-3, -5.0)(0, 0)) <= 1e-12);
  CHECK(E_eval(p, tab, 2.0, 7.0, -4.0).col(1).norm() == 0.0);
  for (double y : {-30.0, -1.0, 0.0, 2.0})
    for (double t : {0.1, 1.0, 10.0, 100.0}) {
      const double b = errfn_bracket(y, t, 1.0, 3.0);
      CHECK(b >= 0.0);
      CHECK(b <= 1.0);
    }
}

TEST_CASE("scattering term Gaussians") {
  const auto& p = burgers_profile();
  const auto& tab = burgers_table();
  // direct incoming Gaussian deep on the left: unit weight
  const double peak = 1.0 / std::sqrt(4.0 * std::numbers::pi * 3.0 * 4.0);
  CHECK(S_eval(p, tab, -96.0, 4.0, -100.0)(0, 0) == doctest::Approx(peak).epsilon(1e-10));
  CHECK(std::abs(peak - 0.081441) <= 1e-5);
  CHECK(S_eval(p, tab, -96.0, 0.5, -100.0).norm() == 0.0);

  // audit against an independent evaluation at random points
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> ux(-40.0, 40.0), ut(1.0, 30.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double x = ux(rng), y = ux(rng), t = ut(rng);
    const bool left = y <= 0.0;
    const double a = left ? 1.0 : -1.0;
    const double w = left ? 1.0 / (1.0 + std::exp(2.0 * x)) : 1.0 / (1.0 + std::exp(-2.0 * x));
    const double z = x - y - a * t;
    const double g = z * z > 144.0 * 6.0 * t ? 0.0 : std::exp(-z * z / (12.0 * t)) / std::sqrt(12.0 * std::numbers::pi * t);
    Mat RL(2, 2);
    // R* = (1, h'(u)), L* = (1, 0) at u = +-1
    RL << 1.0, 0.0, (left ? 1.0 : -1.0), 0.0;
    const Mat expect = w * g * RL;
    CHECK((S_eval(p, tab, x, t, y) - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("shift kernel") {
  const auto& p = burgers_profile();
  const auto& tab = burgers_table();
  const Vec einf = e_kernel(tab, -7.0, 1e6);
  CHECK(einf(0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(std::abs(einf(1)) <= 1e-14);
  CHECK(e_kernel(tab, -2.0, 1e-4).norm() <= 1e-12);
  CHECK(e_kernel(tab, 2.0, 1e-4).norm() <= 1e-12);

  // unit u-mass gives delta(infinity) = 1/2
  Mat U0 = Mat::Zero(2, p.size());
  for (int k = 0; k < p.size(); ++k)
    U0(0, k) = std::exp(-std::pow(p.x[k] + 5.0, 2)) / std::sqrt(std::numbers::pi);
  const auto ls = linear_shift(p, tab, U0, 1e6);
  CHECK(ls.delta == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(linear_shift(p, tab, U0, 1e-3).delta <= 1e-8);
  // E = dU/d delta e, so int E f = delta dU/d delta
  const int i = p.centre() + 37;
  double direct = 0.0;
  for (int k = 0; k < p.size(); ++k) {
    const double w = (k == 0 || k == p.size() - 1) ? 0.5 * p.dx : p.dx;
    direct += w * (E_eval(p, tab, p.x[i], 3.0, p.x[k]) * U0.col(k))(0);
  }
  CHECK(direct == doctest::Approx(linear_shift(p, tab, U0, 3.0).phi(0, i)).epsilon(1e-12));

  // total variation in y shrinks as t -> 0
  auto tv = [&](double t) {
    double s = 0.0;
    for (int k = 1; k < p.size(); ++k) s += (e_kernel(tab, p.x[k], t) - e_kernel(tab, p.x[k - 1], t)).norm();
    return s;
  };
  CHECK(tv(1e-2) < 0.05);
  CHECK(tv(1e-2) < tv(1.0));
  CHECK(tv(1.0) <= 1.0 + 1e-9);
}

TEST_CASE("green_apply pieces") {
  const auto& p = burgers_profile();
  const auto& tab = burgers_table();
  Mat f = Mat::Zero(2, p.size());
  for (int k = 0; k < p.size(); ++k) f(0, k) = bump(p.x[k], -10.0, 2.0);
  const auto g0 = green_apply(p, tab, f, 0.0);
  CHECK((g0.H - f).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(g0.E.norm() == 0.0);
  CHECK(g0.S.norm() == 0.0);
  CHECK(green_apply(p, tab, f, 0.9).S.norm() == 0.0);

  // mass of the decomposition approaches the input mass as H decays and the
  // image terms of the errfn brackets vanish
  double m0 = 0.0;
  for (int k = 0; k < p.size(); ++k) m0 += p.dx * f(0, k);
  auto mass_err = [&](double t) {
    const Mat T = green_apply(p, tab, f, t).total();
    double m = 0.0;
    for (int k = 0; k < p.size(); ++k) m += p.dx * T(0, k);
    return std::abs(m - m0) / m0;
  };
  const double e20 = mass_err(20.0), e40 = mass_err(40.0);
  CHECK(e40 < e20);
  CHECK(e20 < 0.01);

  // stationary mode: the residual shrinks with t
  Mat up(2, p.size());
  for (int k = 0; k < p.size(); ++k) up.col(k) = p.derivative(k);
  auto rel = [&](double t) { return l1_norm(p, green_apply(p, tab, up, t).total() - up) / l1_norm(p, up); };
  CHECK(rel(20.0) < rel(5.0));
}

TEST_CASE("linear operator applied to the stationary mode vanishes") {
  const auto& p = burgers_profile();
  Mat up(2, p.size());
  for (int k = 0; k < p.size(); ++k) up.col(k) = p.derivative(k);
  const Mat Lu = apply_linear_operator(p, up);
  CHECK(Lu.cwiseAbs().maxCoeff() <= 1e-5 * up.cwiseAbs().maxCoeff());
}

TEST_CASE("contour inversion matches the simulator") {
  const auto& p = burgers_profile();
  static const EvansContext ctx(p);
  Mat f = Mat::Zero(2, p.size());
  for (int k = 0; k < p.size(); ++k) f.col(k) << bump(p.x[k], -6.0, 3.0), 0.5 * bump(p.x[k], 4.0, 3.0);
  const double t = 1.0;
  SimOptions so;
  so.snapshot_times = {t};
  const auto x = sim_grid(p, t, so);
  const int off = static_cast<int>(std::lround((p.x[0] - x[0]) / p.dx));
  Mat U0 = Mat::Zero(2, static_cast<int>(x.size()));
  U0.middleCols(off, p.size()) = f;
  const auto run = evolve_linear(p, U0, t, so);
  const Mat sim = run.snapshots.back().middleCols(off, p.size());

  ContourGreenOptions co;
  co.Xi = 60.0;
  const auto cg = contour_green(ctx, f, t, co);
  CHECK(l1_norm(p, cg.value - sim) / l1_norm(p, sim) <= 0.01);
  CHECK(cg.tail_ok);
  CHECK(cg.evaluations == 121);
  CHECK_THROWS_AS(contour_green(ctx, f, 0.0, co), RelaxError);
}

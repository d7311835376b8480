#include "doctest.h"
#include "relax/simulate.hpp"

#include <cmath>
#include <numbers>

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

Mat profile_state(const ShockProfile& p, const std::vector<double>& x) {
  return sample_on(x, p.dim(), [&](double y) { return p.state_at(y); });
}

}  // namespace

TEST_CASE("zero data stays zero") {
  const auto& p = burgers_profile();
  SimOptions so;
  so.snapshot_times = {1.0, 3.0};
  const auto x = sim_grid(p, 3.0, so);
  const auto run = evolve_linear(p, Mat::Zero(2, static_cast<int>(x.size())), 3.0, so);
  CHECK(run.scheme == "exact-transport");
  CHECK(run.dt * run.max_speed == doctest::Approx(run.dx));
  for (const auto& s : run.snapshots) CHECK(s.norm() == 0.0);
  CHECK_THROWS_AS(evolve_linear(p, Mat::Zero(2, 5), 3.0, so), RelaxError);
}

TEST_CASE("stationary translation mode") {
  const auto& p = burgers_profile();
  SimOptions so;
  so.snapshot_times = {20.0};
  const auto x = sim_grid(p, 20.0, so);
  const Mat U0 = sample_on(x, 2, [&](double y) { return Vec(p.derivative_at(y)); });
  const auto run = evolve_linear(p, U0, 20.0, so);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < U0.cols(); ++i) {
    num += (run.snapshots.back().col(i) - U0.col(i)).norm();
    den += U0.col(i).norm();
  }
  CHECK(num / den <= 1e-3);
}

TEST_CASE("linear mass conservation and finite propagation") {
  const auto& p = burgers_profile();
  SimOptions so;
  for (double t = 0.0; t <= 50.0; t += 5.0) so.snapshot_times.push_back(t);
  const auto x = sim_grid(p, 50.0, so);
  Mat U0 = Mat::Zero(2, static_cast<int>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(x[i] + 3.0) < 2.0) U0(0, i) = std::cos(x[i]) + 1.5;
    if (std::abs(x[i] - 4.0) < 1.0) U0(1, i) = 0.7;
  }
  const auto run = evolve_linear(p, U0, 50.0, so);
  CHECK(run.mass_drift <= 1e-8);
  for (const auto& s : run.trace) {
    CHECK(std::abs(s.u_mass - run.trace.front().u_mass) <= 1e-8 * (1.0 + std::abs(run.trace.front().u_mass)));
    CHECK(s.support_lo >= -5.0 - 2.0 * s.t - 2.0 * run.dx - 1e-9);
    CHECK(s.support_hi <= 5.0 + 2.0 * s.t + 2.0 * run.dx + 1e-9);
  }
}

TEST_CASE("nonlinear equilibria") {
  const auto& p = burgers_profile();
  SimOptions so;
  so.snapshot_times = {50.0};
  const auto x = sim_grid(p, 50.0, so);
  const Mat C = sample_on(x, 2, [&](double) { return p.endstate(Side::Minus); });
  const auto rc = evolve_nonlinear(p, C, 50.0, so);
  CHECK((rc.snapshots.back() - C).cwiseAbs().maxCoeff() <= 1e-12);

  // the profile drifts only by the O(dx^2) splitting defect
  const auto run = evolve_nonlinear(p, profile_state(p, x), 50.0, so);
  const double d1 = run.trace.back().Linf;
  CHECK(d1 <= 1e-4);
  auto m = burgers_jx();
  const auto fine = solve_profile(m, p.shock, p.X, 0.5 * p.dx);
  const auto xf = sim_grid(fine, 50.0, so);
  const double d2 = evolve_nonlinear(fine, profile_state(fine, xf), 50.0, so).trace.back().Linf;
  CHECK(d1 / d2 >= 2.0);
  CHECK(run.mass_drift <= 1e-6);
}

TEST_CASE("shift fitting") {
  const auto& p = burgers_profile();
  const auto x = sim_grid(p, 1.0);
  const Mat W = sample_on(x, 2, [&](double y) { return p.state_at(y - 0.3); });
  CHECK(fit_shift(p, x, W, 0.0, 1.0) == doctest::Approx(0.3).epsilon(1e-7));
  CHECK(fit_shift(p, x, profile_state(p, x), 0.1, 1.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-7));
}

TEST_CASE("non-aligned speeds fall back to the upwind scheme") {
  auto m = burgers_jx();
  const auto sh = make_shock(m, Vec::Constant(1, 1.5), Vec::Constant(1, -0.5), 0.5);
  const auto p = solve_profile(m, sh, 40.0, 0.1);
  SimOptions so;
  so.snapshot_times = {5.0, 10.0};
  const auto x = sim_grid(p, 10.0, so);
  Mat U0 = Mat::Zero(2, static_cast<int>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) U0(0, i) = std::exp(-std::pow(x[i] + 5.0, 2));
  const auto run = evolve_linear(p, U0, 10.0, so);
  CHECK(run.scheme == "rusanov");
  CHECK(run.dt * run.max_speed <= run.dx + 1e-12);
  CHECK(run.mass_drift <= 1e-8);
  CHECK(run.trace.back().Linf < run.trace.front().Linf);

  const auto rn = evolve_nonlinear(p, profile_state(p, x), 10.0, so);
  CHECK(rn.scheme == "rusanov");
  CHECK(rn.trace.back().Linf < 0.05);
}

TEST_CASE("decay fit window") {
  const auto& p = burgers_profile();
  const auto& tab = burgers_table();
  SimOptions so;
  so.snapshot_times = {0.0, 5.0, 20.0};
  const auto x = sim_grid(p, 20.0, so);
  const auto run = evolve_linear(p, Mat::Zero(2, static_cast<int>(x.size())), 20.0, so);
  CHECK_THROWS_AS(decay_report(run, p, tab, {2.0}, 5.0, 20.0), RelaxError);
}

TEST_CASE("linear decay rates of a diffusing signal") {
  const auto& p = burgers_profile();
  const auto& tab = burgers_table();
  SimOptions so;
  so.dx = 0.1;
  so.min_half_width = 480.0;
  so.snapshot_times.push_back(0.0);
  for (double t = 10.0; t <= 100.0; t += 5.0) so.snapshot_times.push_back(t);
  const auto x = sim_grid(p, 100.0, so);
  const Mat U0 = sample_on(x, 2, [](double y) {
    Vec v(2);
    v << std::exp(-std::pow(y + 250.0, 2) / 25.0) / std::sqrt(25.0 * std::numbers::pi), 0.0;
    return v;
  });
  const auto run = evolve_linear(p, U0, 100.0, so);
  const auto fits = decay_report(run, p, tab, {1.0, 2.0, std::numeric_limits<double>::infinity()});
  REQUIRE(fits.size() == 3);
  CHECK(std::abs(fits[0].slope) <= 0.1);
  CHECK(fits[1].slope >= -0.35);
  CHECK(fits[1].slope <= -0.15);
  CHECK(fits[1].r2 >= 0.95);
  CHECK(fits[2].slope >= -0.65);
  CHECK(fits[2].slope <= -0.35);
  CHECK(fits[2].r2 >= 0.95);
}

TEST_CASE("Green's comparison from a near-delta") {
  const auto rows = greens_compare(burgers_profile(), burgers_table(), -10.0, {10.0, 30.0, 40.0});
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) CHECK(r.support_ok);
  CHECK(rows[1].rel_error[0] <= 0.35);
  CHECK(rows[2].rel_error[0] < rows[0].rel_error[0]);
}

TEST_CASE("nonlinear shift plateau") {
  const auto rep = nonlinear_experiment(burgers_profile(), burgers_table(), 0.01,
                                        [](double x) { return std::exp(-x * x); }, 60.0, 2.0);
  CHECK(rep.mass == doctest::Approx(0.01 * std::sqrt(std::numbers::pi)).epsilon(1e-6));
  CHECK(rep.predicted_shift == doctest::Approx(0.5 * rep.mass).epsilon(1e-12));
  CHECK(rep.max_abs_delta <= 0.02);
  CHECK(rep.plateau_time >= 0.0);
  CHECK(rep.plateau_time <= 60.0);
  CHECK(std::abs(rep.delta_final - rep.predicted_shift) <= 0.1 * rep.predicted_shift);
  // the linear projection approaches the same limit
  CHECK(std::abs(rep.delta_linear.back() - rep.predicted_shift) <= 0.1 * rep.predicted_shift);
}

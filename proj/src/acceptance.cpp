#include "relax/acceptance.hpp"

#include "relax/asymptotics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <set>

namespace relax {

Instance::Instance(ExperimentConfig cfg, int evans_threads)
    : cfg_(std::move(cfg)), reference_(is_reference_instance(cfg_.model)), threads_(std::max(1, evans_threads)) {
  model_ = build_model(cfg_.model);
  shock_ = build_shock(model_, cfg_.model);
}

const ShockProfile& Instance::profile() {
  if (!profile_) {
    ProfileOptions po;
    po.X = cfg_.grid.X;
    po.dx = cfg_.grid.dx;
    profile_ = solve_profile(model_, shock_, po);
  }
  return *profile_;
}

const EvansContext& Instance::evans() {
  if (!evans_) {
    EvansOptions eo;
    eo.threads = threads_;
    evans_ = std::make_unique<EvansContext>(profile(), eo);
  }
  return *evans_;
}

const ScatteringTable& Instance::table() {
  if (!table_) table_ = scattering_solve(profile());
  return *table_;
}

VerdictSettings Instance::verdict_settings() const {
  VerdictSettings vs;
  vs.outer.R = cfg_.contour.R;
  vs.outer.eta1 = cfg_.contour.eta1;
  vs.r0 = cfg_.contour.r0;
  vs.contour.max_step = cfg_.contour.max_step;
  return vs;
}

const StabilityVerdict& Instance::verdict() {
  if (!verdict_) verdict_ = stability_verdict(evans(), verdict_settings());
  return *verdict_;
}

const SimRun& Instance::decay_run() {
  if (!decay_run_) {
    const auto& sc = cfg_.simulate;
    const auto& p = profile();
    SimOptions so;
    so.dx = sc.dx;
    so.min_half_width = sc.min_half_width;
    so.snapshot_times = {0.0};
    for (double t = 10.0; t <= sc.T + 1e-9; t += 5.0) so.snapshot_times.push_back(t);
    for (double t : sc.snapshot_times) so.snapshot_times.push_back(t);
    std::sort(so.snapshot_times.begin(), so.snapshot_times.end());
    so.snapshot_times.erase(std::unique(so.snapshot_times.begin(), so.snapshot_times.end()), so.snapshot_times.end());
    const auto x = sim_grid(p, sc.T, so);
    const double w2 = sc.decay_width * sc.decay_width;
    const Mat U0 = sample_on(x, p.dim(), [&](double y) {
      Vec v = Vec::Zero(p.dim());
      v(0) = std::exp(-std::pow(y - sc.decay_center, 2) / w2) / std::sqrt(w2 * std::numbers::pi);
      return v;
    });
    decay_run_ = evolve_linear(p, U0, sc.T, so);
  }
  return *decay_run_;
}

const std::vector<DecayFit>& Instance::decay_fits() {
  if (!decay_fits_)
    decay_fits_ = decay_report(decay_run(), profile(), table(), {1.0, 2.0, std::numeric_limits<double>::infinity()});
  return *decay_fits_;
}

double Instance::nonlinear_shape(double x) const {
  const auto& sc = cfg_.simulate;
  const double z = (x - sc.center) / sc.width;
  if (sc.shape == "bump") return std::abs(z) < 1.0 ? std::pow(1.0 - z * z, 4) : 0.0;
  return std::exp(-z * z);
}

const NonlinearReport& Instance::nonlinear() {
  if (!nonlinear_)
    nonlinear_ = nonlinear_experiment(profile(), table(), cfg_.simulate.amplitude,
                                      [this](double x) { return nonlinear_shape(x); }, cfg_.simulate.T, 1.0);
  return *nonlinear_;
}

const std::vector<GreensCompareRow>& Instance::greens_rows() {
  if (!greens_rows_) {
    std::set<double> ts(cfg_.greens.times.begin(), cfg_.greens.times.end());
    ts.insert({10.0, 30.0, 40.0});
    greens_rows_ = greens_compare(profile(), table(), cfg_.greens.y0, std::vector<double>(ts.begin(), ts.end()));
  }
  return *greens_rows_;
}

namespace {

double bump(double y, double c, double w) {
  const double z = (y - c) / w;
  return std::abs(z) < 1.0 ? std::pow(1.0 - z * z, 4) : 0.0;
}

}  // namespace

Mat Instance::smooth_data() {
  const auto& p = profile();
  Mat f = Mat::Zero(p.dim(), p.size());
  for (int k = 0; k < p.size(); ++k) {
    f(0, k) = bump(p.x[k], -6.0, 3.0);
    if (p.dim() > 1) f(p.dim() - 1, k) = 0.5 * bump(p.x[k], 4.0, 3.0);
  }
  return f;
}

const Instance::ContourCheck& Instance::contour_check() {
  if (!contour_) {
    const auto& p = profile();
    const auto& gc = cfg_.greens;
    const Mat f = smooth_data();
    const double t = gc.contour_t;
    SimOptions so;
    so.snapshot_times = {t};
    const auto x = sim_grid(p, t, so);
    const int off = static_cast<int>(std::lround((p.x[0] - x[0]) / p.dx));
    Mat U0 = Mat::Zero(p.dim(), static_cast<int>(x.size()));
    U0.middleCols(off, p.size()) = f;
    const auto run = evolve_linear(p, U0, t, so);
    ContourCheck c;
    c.simulated = run.snapshots.back().middleCols(off, p.size());
    ContourGreenOptions co;
    co.Xi = gc.Xi;
    co.domega = gc.domega;
    co.order = gc.order;
    c.result = contour_green(evans(), f, t, co);
    c.rel_l1 = l1_norm(p, c.result.value - c.simulated) / l1_norm(p, c.simulated);
    contour_ = std::move(c);
  }
  return *contour_;
}

// ---------------------------------------------------------------------------

namespace {

// Accumulates metrics and the pass/fail state of one criterion.
struct Judge {
  CheckLine& line;
  double scale;
  bool ok = true;

  void metric(const std::string& k, double v) { line.metrics.emplace_back(k, v); }
  // upper bounds on errors loosen with --tol-scale; ranges and exact counts do not
  void le(const std::string& k, double v, double tol) {
    metric(k, v);
    ok = ok && v <= tol * scale;
  }
  void ge(const std::string& k, double v, double lo) {
    metric(k, v);
    ok = ok && v >= lo;
  }
  void lt(const std::string& k, double v, double hi) {
    metric(k, v);
    ok = ok && v < hi;
  }
  void in(const std::string& k, double v, double lo, double hi) {
    metric(k, v);
    ok = ok && v >= lo && v <= hi;
  }
  void eq(const std::string& k, double v, double expect) {
    metric(k, v);
    ok = ok && v == expect;
  }
  void flag(const std::string& k, bool b) {
    metric(k, b ? 1.0 : 0.0);
    ok = ok && b;
  }
};

std::pair<double, double> cone_speeds(Instance& inst) {
  double lo = 0.0, hi = 0.0;
  for (Side side : {Side::Minus, Side::Plus}) {
    const auto cm = hyperbolic_modes(inst.model(), endstate_u(inst.shock(), side), endstate_v(inst.shock(), side),
                                     inst.shock().s);
    lo = std::min(lo, cm.speed.front());
    hi = std::max(hi, cm.speed.back());
  }
  return {lo, hi};
}

void c1_profile(Instance& inst, Judge& j) {
  const auto& p = inst.profile();
  double err = 0.0;
  for (int k = 0; k < p.size(); ++k) {
    err = std::max(err, std::abs(p.u(0, k) + std::tanh(p.x[k] / 8.0)));
    err = std::max(err, std::abs(p.v(0, k) - 0.5));
  }
  j.le("sup_error", err, 1e-8);
  const auto rep = verify_profile(p);
  j.metric("tail_rate_minus", rep.tail_minus.rate);
  j.metric("tail_rate_plus", rep.tail_plus.rate);
  j.metric("tail_predicted", p.nu_minus);
  j.le("tail_rel_error", std::max(rep.tail_minus.relative_error, rep.tail_plus.relative_error), 0.02);
}

void c2_structure(Instance& inst, Judge& j) {
  const auto c = classify(inst.model(), inst.shock());
  j.eq("i", c.i, 2);
  j.eq("d_minus_r", c.d - inst.model().r, c.i - inst.model().n);
  j.flag("index_identity", c.index_identity);
  j.flag("lax", c.type == ShockType::Lax);
  j.flag("pure", c.pure);
}

void c3_rates(Instance& inst, Judge& j) {
  const auto& m = inst.model();
  const auto& sh = inst.shock();
  double eta_err = 0.0, eta_fit_err = 0.0, beta_err = 0.0, beta_fit_err = 0.0;
  for (Side side : {Side::Minus, Side::Plus}) {
    const auto cm = hyperbolic_modes(m, endstate_u(sh, side), endstate_v(sh, side), sh.s);
    // slower family damps more upstream, less downstream
    const std::vector<double> expect = side == Side::Minus ? std::vector<double>{0.75, 0.25}
                                                           : std::vector<double>{0.25, 0.75};
    if (cm.family_count() != 2) {
      j.flag("two_families", false);
      return;
    }
    const double xi = 1e4;
    const CVec ev = dispersion_exact(m, sh, side, xi);
    for (int f = 0; f < 2; ++f) {
      const double eta = cm.eta[f](0, 0);
      eta_err = std::max(eta_err, std::abs(eta - expect[f]));
      // branch with Im lambda closest to -xi a_f
      int best = 0;
      for (int b = 1; b < ev.size(); ++b)
        if (std::abs(ev(b).imag() + xi * cm.speed[f]) < std::abs(ev(best).imag() + xi * cm.speed[f])) best = b;
      eta_fit_err = std::max(eta_fit_err, std::abs(-ev(best).real() - eta));
    }
    const double beta = chapman_enskog(m, endstate_u(sh, side)).beta_diag(0);
    beta_err = std::max(beta_err, std::abs(beta - 3.0));
    // -Re lambda / xi^2 = beta + O(xi^2) on the slow branch; intercept of the fit
    std::vector<double> x2, y;
    for (double k : logspace(1e-3, 1e-2, 8)) {
      const CVec e = dispersion_exact(m, sh, side, k);
      const cplx slow = std::abs(e(0)) < std::abs(e(1)) ? e(0) : e(1);
      x2.push_back(k * k);
      y.push_back(-slow.real() / (k * k));
    }
    beta_fit_err = std::max(beta_fit_err, std::abs(fit_line(x2, y).intercept - beta) / beta);
  }
  j.le("eta_error", eta_err, 1e-12);
  j.le("eta_fit_error", eta_fit_err, 1e-3);
  j.le("beta_error", beta_err, 1e-12);
  j.le("beta_fit_rel_error", beta_fit_err, 1e-3);
}

void c4_dissipativity(Instance& inst, Judge& j) {
  const auto rep = check_hypotheses(inst.model(), inst.shock());
  j.in("theta_minus", rep.theta_minus, 0.15, 0.30);
  j.in("theta_plus", rep.theta_plus, 0.15, 0.30);
  j.in("theta_est", rep.theta_est, 0.15, 0.30);
  j.flag("h3", rep.h3_dissipative);
}

void c5_expansions(Instance& inst, Judge& j) {
  double hi_slope = -1e9, lo_slope = 1e9;
  for (Side side : {Side::Minus, Side::Plus}) {
    std::vector<double> lx, ly;
    for (double lam : logspace(10.0, 1000.0, 9)) {
      const auto me = mode_expansion(inst.model(), inst.shock(), lam, side, Regime::HighFrequency);
      lx.push_back(std::log(lam));
      ly.push_back(std::log((me.mu - me.predicted).cwiseAbs().maxCoeff()));
    }
    hi_slope = std::max(hi_slope, fit_line(lx, ly).slope);
    lx.clear();
    ly.clear();
    for (double lam : logspace(1e-3, 1e-1, 9)) {
      const auto me = mode_expansion(inst.model(), inst.shock(), lam, side, Regime::LowFrequency);
      double e = 0.0;
      for (int i : me.slow_index) e = std::max(e, std::abs(me.mu(i) - me.predicted(i)));
      if (me.slow_index.empty() || !(e > 0.0)) break;
      lx.push_back(std::log(lam));
      ly.push_back(std::log(e));
    }
    if (lx.size() == 9) lo_slope = std::min(lo_slope, fit_line(lx, ly).slope);
  }
  j.ge("high_frequency_order", -hi_slope, 0.9);
  j.ge("slow_root_order", lo_slope, 2.7);
}

void c6_resolvent(Instance& inst, Judge& j) {
  const auto& ctx = inst.evans();
  const auto& p = inst.profile();
  std::mt19937 rng(inst.config().seed);
  std::uniform_real_distribution<double> re(0.05, 3.0), im(-5.0, 5.0);
  const int span = std::min(200, p.centre() - 1);
  std::uniform_int_distribution<int> idx(p.centre() - span, p.centre() + span);
  double jump_err = 0.0;
  for (int t = 0; t < 5; ++t) {
    const auto b = resolvent_bases(ctx, {re(rng), im(rng)});
    for (int q = 0; q < 4; ++q) {
      const int k = idx(rng);
      const CMat jump = resolvent_kernel(b, k, k, true) - resolvent_kernel(b, k, k, false);
      const Mat Ai = frame_jacobians(p.model, p.u.col(k), p.v.col(k), inst.shock().s).A.inverse();
      jump_err = std::max(jump_err, (jump + Ai.cast<cplx>()).norm() / Ai.norm());
    }
  }
  j.le("jump_rel_error", jump_err, 1e-8);
  double rate = 1e9;
  const int reach = std::min(400, p.centre() - 1);
  for (cplx lam : {cplx(0.5, 1.0), cplx(1.0, -2.0), cplx(2.0, 0.5)}) {
    const auto b = resolvent_bases(ctx, lam);
    const int c = p.centre();
    for (int dir : {1, -1}) {
      std::vector<double> d, lg;
      for (int off = 20; off <= reach; off += 20) {
        d.push_back(off * p.dx);
        lg.push_back(std::log(resolvent_kernel(b, c + dir * off, c).norm()));
      }
      rate = std::min(rate, -fit_line(d, lg).slope);
    }
  }
  j.ge("min_decay_rate", rate, 1e-300);
}

void c7_evans(Instance& inst, Judge& j) {
  const auto& v = inst.verdict();
  const auto& ctx = inst.evans();
  double sym = 0.0;
  int used = 0;
  for (const auto& smp : v.outer_report.samples) {
    if (used >= 12) break;
    if (smp.lambda.real() <= 0.1 || smp.lambda.imag() <= 0.1) continue;
    const auto a = evans_value(ctx, smp.lambda), b = evans_value(ctx, std::conj(smp.lambda));
    sym = std::max({sym, std::abs(a.log_abs - b.log_abs), std::abs(std::remainder(a.arg + b.arg, 2 * std::numbers::pi))});
    ++used;
  }
  j.le("conjugate_symmetry", sym, 1e-8);
  j.eq("winding_big", v.winding_big, 0);
  j.eq("winding_origin", v.winding_origin, v.ell);
  j.eq("ell", v.ell, 1);
  j.flag("D1", v.D1 == Tri::Pass);
  j.flag("D2", v.D2 == Tri::Pass);
  j.flag("script_D", v.script_D == Tri::Pass);
  j.metric("delta", v.delta);

  // halve the arc-length step on both contours
  const auto vs = inst.verdict_settings();
  ContourOptions half = vs.contour;
  const double base_outer = vs.contour.max_step > 0 ? vs.contour.max_step : contour_length(vs.outer) / 200.0;
  half.max_step = 0.5 * base_outer;
  const auto ro = evans_on_contour(ctx, vs.outer, half);
  ContourSpec circ;
  circ.kind = ContourSpec::Kind::Circle;
  circ.r0 = vs.r0;
  ContourOptions half_c = vs.contour;
  half_c.max_step = 0.5 * (vs.contour.max_step > 0 ? vs.contour.max_step : contour_length(circ) / 200.0);
  const auto rc = evans_on_contour(ctx, circ, half_c);
  j.flag("halved_closed", ro.closed_ok && rc.closed_ok);
  j.eq("halved_winding_big", ro.winding - rc.winding, v.winding_big);
  j.eq("halved_winding_origin", rc.winding, v.winding_origin);
}

void c8_scattering(Instance& inst, Judge& j) {
  const auto& tab = inst.table();
  bool exact = !tab.entries.empty();
  for (const auto& e : tab.entries) exact = exact && e.c0 == 0.5 && e.c_minus.empty() && e.c_plus.empty();
  j.flag("c0_exact_half", exact);
  j.metric("c0", tab.entries.empty() ? 0.0 : tab.entries.front().c0);
  j.le("pi_error", std::hypot(tab.pi(0) - 0.5, tab.pi.tail(tab.pi.size() - 1).norm()), 1e-14);
  j.le("delta_error", std::abs(std::abs(tab.delta) - 2.0), 1e-12);
  j.metric("delta", tab.delta);
  j.le("pi_consistency", tab.pi_consistency, 1e-10);
}

void c9_green_identities(Instance& inst, Judge& j) {
  const auto& p = inst.profile();
  const auto& tab = inst.table();
  const int N = p.dim();
  std::mt19937 rng(inst.config().seed);
  std::normal_distribution<double> nd;
  Mat f(N, p.size());
  for (int k = 0; k < p.size(); ++k)
    for (int r = 0; r < N; ++r) f(r, k) = nd(rng);
  j.le("H0_identity", (H_apply(p, f, 0.0) - f).cwiseAbs().maxCoeff(), 1e-12);

  const auto [alo, ahi] = cone_speeds(inst);
  const double y0 = inst.config().greens.y0;
  Mat g = Mat::Zero(N, p.size());
  for (int k = 0; k < p.size(); ++k) g(0, k) = bump(p.x[k], y0, 1.0);
  bool cone = true;
  for (double t : {2.0, 5.0, 12.0}) {
    const Mat h = H_apply(p, g, t);
    const double lo = y0 - 1.0 + alo * t - 2.0 * p.dx, hi = y0 + 1.0 + ahi * t + 2.0 * p.dx;
    double outside = 0.0, edge_lo = 0.0, edge_hi = 0.0;
    for (int k = 0; k < p.size(); ++k) {
      const double x = p.x[k], a = h.col(k).norm();
      if (x < lo || x > hi) outside = std::max(outside, a);
      if (std::abs(x - (y0 + alo * t)) < 0.5) edge_lo = std::max(edge_lo, a);
      if (std::abs(x - (y0 + ahi * t)) < 0.5) edge_hi = std::max(edge_hi, a);
    }
    cone = cone && outside == 0.0 && edge_lo > 0.0 && edge_hi > 0.0;
  }
  j.flag("H_support_cone", cone);

  const Mat up = shift_mode(p);
  double worst = 0.0;
  for (double t : {1.0, 5.0, 20.0}) {
    const double e = l1_norm(p, green_apply(p, tab, up, t).total() - up) / l1_norm(p, up);
    j.metric("ubar_prime_rel_l1_t" + format_number(t), e);
    worst = std::max(worst, e);
  }
  j.le("ubar_prime_rel_l1_max", worst, 0.05);

  // unit-mass near-delta at y0
  Mat d = Mat::Zero(N, p.size());
  const int k0 = static_cast<int>(std::lround((y0 + p.X) / p.dx));
  d(0, k0 - 1) = 0.25 / p.dx;
  d(0, k0) = 0.5 / p.dx;
  d(0, k0 + 1) = 0.25 / p.dx;
  const Mat T = green_apply(p, tab, d, 20.0).total();
  double m0 = 0.0, m = 0.0;
  for (int k = 0; k < p.size(); ++k) {
    m0 += p.dx * d(0, k);
    m += p.dx * T(0, k);
  }
  j.le("mass_error_t20", std::abs(m - m0), 1e-6);
}

void c10_contour(Instance& inst, Judge& j) {
  const auto& c = inst.contour_check();
  j.le("rel_l1", c.rel_l1, 0.05);
  j.metric("tail_estimate", c.result.tail_estimate);
  j.metric("evaluations", c.result.evaluations);
  j.flag("tail_ok", c.result.tail_ok);
}

void c11_decay(Instance& inst, Judge& j) {
  const auto& fits = inst.decay_fits();
  j.in("slope_L1", fits[0].slope, -0.1, 0.1);
  j.metric("r2_L1", fits[0].r2);
  j.in("slope_L2", fits[1].slope, -0.35, -0.15);
  j.ge("r2_L2", fits[1].r2, 0.95);
  j.in("slope_Linf", fits[2].slope, -0.65, -0.35);
  j.ge("r2_Linf", fits[2].r2, 0.95);
  j.metric("t_lo", fits[1].t_lo);
  j.metric("t_hi", fits[1].t_hi);
}

void c12_greens_compare(Instance& inst, Judge& j) {
  const auto& rows = inst.greens_rows();
  auto at = [&](double t) -> const GreensCompareRow& {
    for (const auto& r : rows)
      if (std::abs(r.t - t) < 1e-9) return r;
    throw RelaxError(ErrorKind::InvalidInput, "greens comparison lacks t = " + format_number(t));
  };
  bool support = true;
  for (const auto& r : rows) {
    support = support && r.support_ok;
    j.metric("rel_l1_t" + format_number(r.t), r.rel_error[0]);
  }
  j.le("rel_l1_at_30", at(30.0).rel_error[0], 0.35);
  j.lt("ratio_40_over_10", at(40.0).rel_error[0] / at(10.0).rel_error[0], 1.0);
  j.flag("support_in_cone", support);
}

void c13_nonlinear(Instance& inst, Judge& j) {
  const auto& r = inst.nonlinear();
  j.metric("mass", r.mass);
  j.metric("predicted_shift", r.predicted_shift);
  j.in("linf_exponent", r.linf_fit.slope, -0.65, -0.35);
  j.metric("linf_r2", r.linf_fit.r2);
  j.le("max_abs_delta", r.max_abs_delta, 0.02);
  j.metric("delta_final", r.delta_final);
  j.metric("plateau_time", r.plateau_time);
  j.flag("plateau_by_60", r.plateau_time >= 0.0 && r.plateau_time <= 60.0);
  j.metric("half_mass", 0.5 * r.mass);
}

Mat rot(double t) {
  Mat R(2, 2);
  R << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return R;
}

void c14_appendix(Instance& inst, Judge& j) {
  std::mt19937 rng(inst.config().seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  double syl = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Mat d1(4, 4), d2(3, 3), F(4, 3);
    for (auto* m : {&d1, &d2, &F})
      for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = nd(rng);
    d1.diagonal().array() += 6.0;
    d2.diagonal().array() -= 6.0;
    syl = std::max(syl, sylvester(d1, d2, F).residual / (1.0 + F.norm()));
  }
  j.le("sylvester_residual", syl, 1e-12);

  auto rotating = [](double x) {
    Mat D = Mat::Zero(2, 2);
    D.diagonal() << 1.0, -1.0;
    const Mat R = rot(0.3 * std::tanh(x));
    return Mat(R * D * R.transpose());
  };
  j.le("goodman_rel_LRprime", goodman_frame(rotating, linspace(-6.0, 6.0, 1201)).relative_LRprime, 1e-8);

  // high-frequency Jin–Xin eigenvalue system about the Burgers profile
  Mat A(2, 2);
  A << 0, 1, 4, 0;
  const Mat Ai = A.inverse();
  auto A0 = [&](double) { return Mat(-Ai); };
  const auto x = linspace(-10.0, 10.0, 2001);
  const auto fr = goodman_frame(A0, x);
  auto A1c = [&](double) {
    Mat q = Mat::Zero(2, 2);
    q(1, 0) = 1.0;
    q(1, 1) = -1.0;
    return Mat(Ai * q);
  };
  const auto st = block_diagonalize(A0, A1c, 0.1, fr);
  std::vector<double> diag = {st.D1[0](0, 0), st.D1[0](1, 1)};
  std::sort(diag.begin(), diag.end());
  j.le("diag_error", std::max(std::abs(diag[0] + 0.125), std::abs(diag[1] - 0.375)), 1e-8);
  auto A1 = [&](double xx) {
    Mat q = Mat::Zero(2, 2);
    q(1, 0) = -std::tanh(xx / 8.0);
    q(1, 1) = -1.0;
    return Mat(Ai * q);
  };
  const double r1 = block_diagonalize(A0, A1, 0.1, fr).offdiag_residual;
  const double r2 = block_diagonalize(A0, A1, 0.05, fr).offdiag_residual;
  j.ge("blockdiag_order", std::log2(r1 / r2), 1.9);

  // gap lemma basis against direct integration from the far field
  const cplx lambda = 0.5;
  const CMat Aic = Ai.cast<cplx>();
  auto coeff = [&](double xx) {
    CMat q = CMat::Zero(2, 2);
    q(1, 0) = -std::tanh(xx / 8.0);
    q(1, 1) = -1.0;
    return CMat(Aic * (q - lambda * CMat::Identity(2, 2)));
  };
  const CMat Am = coeff(-1e4);
  const auto eig = complex_eigen(Am);
  const int iu = eig.values(0).real() > eig.values(1).real() ? 0 : 1;
  GapOptions go;
  go.alpha = 0.25;
  const auto g = gap_basis(coeff, Am, eig.values(iu), eig.right.col(iu), go, lambda);
  const cplx mu = g.mu;
  auto rhs = [&](double xx, const CVec& v) { return CVec((coeff(xx) - mu * CMat::Identity(2, 2)) * v); };
  CVec v = g.V_minus;
  double xx = g.x.front();
  std::vector<CVec> direct(g.x.size());
  direct[0] = v;
  for (std::size_t k = 1; k < g.x.size(); ++k) {
    const double h = 0.5 * (g.x[k] - g.x[k - 1]);
    for (int sub = 0; sub < 2; ++sub) {
      const CVec k1 = rhs(xx, v), k2 = rhs(xx + 0.5 * h, v + 0.5 * h * k1), k3 = rhs(xx + 0.5 * h, v + 0.5 * h * k2),
                 k4 = rhs(xx + h, v + h * k3);
      v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      xx += h;
    }
    direct[k] = v;
  }
  const int km = g.index_minus_M;
  const cplx sc = g.V[km].dot(direct[km]) / direct[km].squaredNorm();
  double gerr = 0.0;
  for (std::size_t k = km; k < g.x.size(); ++k) gerr = std::max(gerr, (g.V[k] - sc * direct[k]).norm());
  j.le("gap_basis_error", gerr, 1e-6);

  auto M = [](double z) {
    Mat m(2, 2);
    m << -1.0 - 0.3 * std::tanh(z), 0.2, 0.0, -2.0;
    return m;
  };
  auto Th = [](double z) {
    Mat t(2, 2);
    t << std::cos(z), 0.5, -0.3, 1.0;
    return t;
  };
  std::vector<double> ld, le;
  for (double d : {0.1, 0.05, 0.025}) {
    ld.push_back(std::log(d));
    le.push_back(std::log(reduced_flow_first_order(M, Th, d, 1.0, -1.0, 2.0).error));
  }
  j.ge("reduced_flow_order", fit_line(ld, le).slope, 1.8);
  const double es = reduced_flow_first_order([](double) { return Mat::Constant(1, 1, -1.0); },
                                             [](double) { return Mat::Constant(1, 1, 1.0); }, 0.1, 1.0, 0.0, 2.0)
                        .error;
  j.in("scalar_flow_error", es, 0.8 * 2.8e-3, 1.2 * 2.8e-3);
}

void c15_conservation(Instance& inst, Judge& j) {
  const auto& p = inst.profile();
  SimOptions so;
  for (double t = 0.0; t <= 50.0; t += 5.0) so.snapshot_times.push_back(t);
  const auto x = sim_grid(p, 50.0, so);
  Mat U0 = Mat::Zero(p.dim(), static_cast<int>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(x[i] + 3.0) < 2.0) U0(0, i) = std::cos(x[i]) + 1.5;
    if (std::abs(x[i] - 4.0) < 1.0) U0(p.dim() - 1, i) = 0.7;
  }
  const auto run = evolve_linear(p, U0, 50.0, so);
  const auto [alo, ahi] = cone_speeds(inst);
  double drift = 0.0, excess = 0.0;
  const double m0 = run.trace.front().u_mass;
  for (const auto& s : run.trace) {
    drift = std::max(drift, std::abs(s.u_mass - m0) / (1.0 + std::abs(m0)));
    excess = std::max({excess, (-5.0 + alo * s.t) - s.support_lo, s.support_hi - (5.0 + ahi * s.t)});
  }
  j.le("mass_drift", drift, 1e-8);
  j.metric("support_excess", excess);
  j.flag("support_in_cone", excess <= 2.0 * run.dx + 1e-9);
}

bool reference_only(int id) { return id == 1 || id == 2 || id == 3 || id == 4 || id == 8; }

}  // namespace

const char* criterion_title(int id) {
  static const char* titles[] = {"",
                                 "profile closed form and tail rate",
                                 "structure and classification",
                                 "dissipation and diffusion rates",
                                 "dissipativity constant",
                                 "mode expansion orders",
                                 "resolvent jump and decay",
                                 "evans windings and verdicts",
                                 "scattering coefficients",
                                 "green's function identities",
                                 "contour inversion",
                                 "linear decay rates",
                                 "green's comparison",
                                 "nonlinear stability",
                                 "appendix machinery",
                                 "conservation and propagation"};
  return id >= 1 && id <= 15 ? titles[id] : "unknown";
}

CheckLine run_criterion(int id, Instance& inst) {
  CheckLine line;
  line.criterion = id;
  line.title = criterion_title(id);
  if (id < 1 || id > 15) throw RelaxError(ErrorKind::InvalidInput, "no criterion " + std::to_string(id));
  if (reference_only(id) && !inst.reference()) {
    line.status = Status::Skip;
    line.note = "closed-form oracle of the reference shock";
    return line;
  }
  const auto t0 = std::chrono::steady_clock::now();
  Judge j{line, inst.config().tol_scale};
  try {
    switch (id) {
      case 1: c1_profile(inst, j); break;
      case 2: c2_structure(inst, j); break;
      case 3: c3_rates(inst, j); break;
      case 4: c4_dissipativity(inst, j); break;
      case 5: c5_expansions(inst, j); break;
      case 6: c6_resolvent(inst, j); break;
      case 7: c7_evans(inst, j); break;
      case 8: c8_scattering(inst, j); break;
      case 9: c9_green_identities(inst, j); break;
      case 10: c10_contour(inst, j); break;
      case 11: c11_decay(inst, j); break;
      case 12: c12_greens_compare(inst, j); break;
      case 13: c13_nonlinear(inst, j); break;
      case 14: c14_appendix(inst, j); break;
      case 15: c15_conservation(inst, j); break;
    }
  } catch (const RelaxError& e) {
    j.ok = false;
    line.note = std::string(to_string(e.kind())) + ": " + e.what();
  }
  line.status = j.ok ? Status::Pass : Status::Fail;
  line.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return line;
}

std::vector<CheckLine> run_criteria(const std::vector<int>& ids, Instance& inst, bool print) {
  std::vector<CheckLine> out;
  for (int id : ids) {
    out.push_back(run_criterion(id, inst));
    if (print) {
      std::printf("%s\n", out.back().summary().c_str());
      std::fflush(stdout);
    }
  }
  return out;
}

std::vector<int> default_criteria(const std::string& subcommand) {
  if (subcommand == "profile") return {1, 2};
  if (subcommand == "hypotheses") return {3, 4};
  if (subcommand == "evans") return {5, 6, 7, 14};
  if (subcommand == "scattering") return {8};
  if (subcommand == "greens") return {9, 10, 12};
  if (subcommand == "simulate") return {11, 13, 15};
  if (subcommand == "verify-all") return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  return {};
}

}  // namespace relax

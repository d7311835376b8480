// relaxshock: command-line driver for the relaxation-shock stability pipeline.
#include "relax/acceptance.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <thread>

using namespace relax;
using ojson = nlohmann::ordered_json;

namespace {

std::vector<std::string> component_names(const ShockProfile& p) {
  std::vector<std::string> names;
  const int n = p.model.n, r = p.model.r;
  for (int i = 0; i < n; ++i) names.push_back(n == 1 ? "u" : "u" + std::to_string(i));
  for (int i = 0; i < r; ++i) names.push_back(r == 1 ? "v" : "v" + std::to_string(i));
  return names;
}

ojson vec_json(const Vec& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ojson tri_json(Tri t) {
  if (t == Tri::Unknown) return nullptr;
  return t == Tri::Pass;
}

void write_json(Report& rep, const std::string& name, const ojson& j) { rep.write_text(name, j.dump(2) + "\n"); }

void write_state_csv(Report& rep, const std::string& name, const std::vector<std::string>& comps,
                     const std::vector<double>& x, const Mat& W) {
  std::vector<std::string> header = {"x"};
  header.insert(header.end(), comps.begin(), comps.end());
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> r = {x[i]};
    for (Eigen::Index c = 0; c < W.rows(); ++c) r.push_back(W(c, static_cast<Eigen::Index>(i)));
    rows.push_back(std::move(r));
  }
  rep.write_csv(name, header, rows);
}

// ---------------------------------------------------------------------------
// artifact writers, one per subcommand

void export_profile(Instance& inst, Report& rep) {
  const auto& p = inst.profile();
  const auto comps = component_names(p);
  std::vector<std::string> header = {"x"};
  for (const auto& c : comps) header.push_back(c);
  for (const auto& c : comps) header.push_back("d" + c);
  std::vector<std::vector<double>> rows;
  for (int k = 0; k < p.size(); ++k) {
    std::vector<double> r = {p.x[k]};
    const Vec s = p.state(k), d = p.derivative(k);
    for (Eigen::Index i = 0; i < s.size(); ++i) r.push_back(s(i));
    for (Eigen::Index i = 0; i < d.size(); ++i) r.push_back(d(i));
    rows.push_back(std::move(r));
  }
  rep.write_csv("profile.csv", header, rows);

  const auto vr = verify_profile(p);
  const auto& c = p.classification;
  auto tail = [](const TailFit& t) {
    return ojson{{"rate", t.rate}, {"r2", t.r2}, {"predicted", t.predicted}, {"relative_error", t.relative_error},
                 {"samples", t.samples}};
  };
  ojson j;
  j["X"] = p.X;
  j["dx"] = p.dx;
  j["points"] = p.size();
  j["speed"] = p.shock.s;
  j["classification"] = {{"type", to_string(c.type)}, {"i_minus", c.i_minus}, {"i_plus", c.i_plus}, {"i", c.i},
                         {"d_minus", c.d_minus},      {"d_plus", c.d_plus},   {"d", c.d},      {"ell", c.ell},
                         {"pure", c.pure},            {"extreme", c.extreme}, {"index_identity", c.index_identity}};
  j["verification"] = {{"rh_residual", vr.rh_residual},
                       {"first_integral_drift", vr.first_integral_drift},
                       {"endstate_error_minus", vr.endstate_error_minus},
                       {"endstate_error_plus", vr.endstate_error_plus},
                       {"tail_minus", tail(vr.tail_minus)},
                       {"tail_plus", tail(vr.tail_plus)},
                       {"ok", vr.ok()},
                       {"flags", vr.flags}};
  write_json(rep, "profile_report.json", j);
}

void export_hypotheses(Instance& inst, Report& rep) {
  const auto h = check_hypotheses(inst.model(), inst.shock());
  ojson j = {{"H1_constant_multiplicity", h.h1_constant_multiplicity},
             {"H1_pattern", h.h1_pattern},
             {"H2_equilibrium_hyperbolic", h.h2_equilibrium_hyperbolic},
             {"H2_noncharacteristic", h.h2_noncharacteristic},
             {"H3_dissipative", h.h3_dissipative},
             {"theta_minus", h.theta_minus},
             {"theta_plus", h.theta_plus},
             {"theta_est", h.theta_est},
             {"theta_interior", h.theta_interior},
             {"interior_warning", h.interior_warning},
             {"eta_positive", h.eta_positive},
             {"beta_positive", h.beta_positive},
             {"all_pass", h.all_pass()},
             {"messages", h.messages}};
  if (h.subcharacteristic) j["subcharacteristic"] = *h.subcharacteristic;
  ojson sides = ojson::object();
  for (Side side : {Side::Minus, Side::Plus}) {
    const auto md = mode_data(inst.model(), endstate_u(inst.shock(), side), inst.shock().s);
    ojson fam = ojson::array();
    const auto& cm = md.characteristic;
    for (int f = 0; f < cm.family_count(); ++f) {
      Eigen::VectorXcd ev = cm.eta[f].eigenvalues();
      ojson eta = ojson::array();
      for (Eigen::Index i = 0; i < ev.size(); ++i) eta.push_back(ev(i).real());
      fam.push_back({{"speed", cm.speed[f]}, {"multiplicity", cm.multiplicity[f]}, {"eta", eta}});
    }
    sides[to_string(side)] = {{"frozen", fam},
                              {"equilibrium_speeds", vec_json(md.equilibrium.speeds.array() - inst.shock().s)},
                              {"beta_star", vec_json(md.chapman_enskog.beta_diag)}};
  }
  j["modes"] = sides;
  write_json(rep, "hypotheses.json", j);

  const auto xis = logspace(1e-3, 1e3, 121);
  for (Side side : {Side::Minus, Side::Plus}) {
    const auto sweep = dispersion_sweep(inst.model(), inst.shock(), side, xis);
    std::vector<std::string> header = {"xi"};
    const int B = sweep.empty() ? 0 : static_cast<int>(sweep.front().size());
    for (int b = 0; b < B; ++b) {
      header.push_back("re_" + std::to_string(b));
      header.push_back("im_" + std::to_string(b));
    }
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < xis.size(); ++k) {
      std::vector<double> r = {xis[k]};
      for (int b = 0; b < B; ++b) {
        r.push_back(sweep[k](b).real());
        r.push_back(sweep[k](b).imag());
      }
      rows.push_back(std::move(r));
    }
    rep.write_csv(std::string("dispersion_") + to_string(side) + ".csv", header, rows);
  }
}

void write_contour(Report& rep, const std::string& name, const ContourReport& c) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < c.samples.size(); ++i) {
    const auto& s = c.samples[i];
    rows.push_back({static_cast<double>(i), s.lambda.real(), s.lambda.imag(), s.log_abs, s.arg_unwound,
                    static_cast<double>(s.k_stable)});
  }
  rep.write_csv(name, {"idx", "re_lambda", "im_lambda", "log_abs_D", "arg_unwound", "k_stable"}, rows);
}

void export_evans(Instance& inst, Report& rep) {
  const auto& v = inst.verdict();
  write_contour(rep, "contour_outer.csv", v.outer_report);
  write_contour(rep, "contour_origin.csv", v.circle_report);
  ojson j = {{"D1", tri_json(v.D1)},
             {"D2", tri_json(v.D2)},
             {"script_D", tri_json(v.script_D)},
             {"winding_big", v.winding_big},
             {"winding_origin", v.winding_origin},
             {"delta", v.delta},
             {"ell", v.ell}};
  write_json(rep, "verdict.json", j);
}

void export_scattering(Instance& inst, Report& rep) {
  const auto& t = inst.table();
  ojson entries = ojson::array();
  for (const auto& e : t.entries)
    entries.push_back({{"side", to_string(e.side)},
                       {"family", e.family},
                       {"speed", e.speed},
                       {"beta", e.beta},
                       {"r_star", vec_json(e.r_star)},
                       {"c_minus", e.c_minus},
                       {"c_plus", e.c_plus},
                       {"c0", e.c0},
                       {"residual", e.residual}});
  auto outgoing = [](const std::vector<OutgoingMode>& modes) {
    ojson a = ojson::array();
    for (const auto& m : modes) a.push_back({{"family", m.family}, {"speed", m.speed}, {"beta", m.beta}});
    return a;
  };
  Mat sys = t.system;
  ojson system = ojson::array();
  for (Eigen::Index r = 0; r < sys.rows(); ++r) system.push_back(vec_json(sys.row(r).transpose()));
  ojson j = {{"entries", entries},
             {"outgoing_minus", outgoing(t.out_minus)},
             {"outgoing_plus", outgoing(t.out_plus)},
             {"mass", vec_json(t.mass)},
             {"system", system},
             {"delta", t.delta},
             {"liu_majda_delta", t.liu_majda},
             {"pi", vec_json(t.pi)},
             {"pi_consistency", t.pi_consistency},
             {"max_residual", t.max_residual}};
  write_json(rep, "scattering.json", j);
}

void export_greens(Instance& inst, Report& rep) {
  const auto& p = inst.profile();
  const auto& tab = inst.table();
  const auto& gc = inst.config().greens;
  const auto comps = component_names(p);
  const int N = p.dim();
  Mat d = Mat::Zero(N, p.size());
  const int k0 = static_cast<int>(std::lround((gc.y0 + p.X) / p.dx));
  if (k0 < 1 || k0 > p.size() - 2) throw RelaxError(ErrorKind::InvalidInput, "greens.y0 lies outside the profile grid");
  d(0, k0 - 1) = 0.25 / p.dx;
  d(0, k0) = 0.5 / p.dx;
  d(0, k0 + 1) = 0.25 / p.dx;

  std::vector<std::string> header = {"x", "t", "y0"};
  for (const auto& c : comps)
    for (const char* part : {"H", "E", "S", "total_"}) header.push_back(part + c);
  std::vector<std::vector<double>> rows;
  for (double t : gc.times) {
    const auto g = green_apply(p, tab, d, t);
    const Mat T = g.total();
    for (int k = 0; k < p.size(); ++k) {
      std::vector<double> r = {p.x[k], t, gc.y0};
      for (int c = 0; c < N; ++c) {
        r.push_back(g.H(c, k));
        r.push_back(g.E(c, k));
        r.push_back(g.S(c, k));
        r.push_back(T(c, k));
      }
      rows.push_back(std::move(r));
    }
  }
  rep.write_csv("greens_field.csv", header, rows);

  std::vector<std::string> ch = {"t"};
  for (const auto& c : comps) ch.push_back("rel_l1_" + c);
  for (const char* s : {"support_lo", "support_hi", "cone_lo", "cone_hi", "support_ok"}) ch.push_back(s);
  std::vector<std::vector<double>> crows;
  for (const auto& r : inst.greens_rows()) {
    std::vector<double> row = {r.t};
    row.insert(row.end(), r.rel_error.begin(), r.rel_error.end());
    row.insert(row.end(), {r.support_lo, r.support_hi, r.cone_lo, r.cone_hi, r.support_ok ? 1.0 : 0.0});
    crows.push_back(std::move(row));
  }
  rep.write_csv("greens_compare.csv", ch, crows);

  const auto& cc = inst.contour_check();
  const Mat f = inst.smooth_data();
  std::vector<std::string> hh = {"x"};
  for (const auto& c : comps) hh.push_back("initial_" + c);
  for (const auto& c : comps) hh.push_back("contour_" + c);
  for (const auto& c : comps) hh.push_back("simulated_" + c);
  std::vector<std::vector<double>> hrows;
  for (int k = 0; k < p.size(); ++k) {
    std::vector<double> r = {p.x[k]};
    for (int c = 0; c < N; ++c) r.push_back(f(c, k));
    for (int c = 0; c < N; ++c) r.push_back(cc.result.value(c, k));
    for (int c = 0; c < N; ++c) r.push_back(cc.simulated(c, k));
    hrows.push_back(std::move(r));
  }
  rep.write_csv("contour_green.csv", hh, hrows);
  write_json(rep, "contour_green.json",
             {{"t", gc.contour_t},
              {"Xi", gc.Xi},
              {"domega", gc.domega},
              {"order", gc.order},
              {"evaluations", cc.result.evaluations},
              {"tail_estimate", cc.result.tail_estimate},
              {"tail_ok", cc.result.tail_ok},
              {"rel_l1_vs_simulator", cc.rel_l1}});
}

void export_simulate(Instance& inst, Report& rep) {
  const auto& sc = inst.config().simulate;
  const auto& p = inst.profile();
  const auto comps = component_names(p);
  ojson j;
  if (sc.kind != "nonlinear") {
    const auto& run = inst.decay_run();
    const auto& tab = inst.table();
    std::vector<std::vector<double>> rows;
    for (const auto& s : run.trace) {
      double delta = 0.0;
      for (std::size_t i = 0; i < run.x.size(); ++i)
        delta += run.dx * e_kernel(tab, run.x[i], s.t).dot(run.initial.col(static_cast<Eigen::Index>(i)));
      rows.push_back({s.t, s.L1, s.L2, s.Linf, delta});
    }
    rep.write_csv("norms_linear.csv", {"t", "L1", "L2", "Linf", "delta_hat"}, rows);
    std::vector<std::vector<double>> frows;
    ojson fits = ojson::array();
    for (const auto& f : inst.decay_fits()) {
      frows.push_back({f.p, f.slope, f.intercept, f.r2, static_cast<double>(f.samples), f.t_lo, f.t_hi});
      fits.push_back({{"p", format_number(f.p)}, {"slope", f.slope}, {"r2", f.r2}});
    }
    rep.write_csv("decay_fits.csv", {"p", "slope", "intercept", "r2", "samples", "t_lo", "t_hi"}, frows);
    for (double t : sc.snapshot_times)
      for (std::size_t k = 0; k < run.times.size(); ++k)
        if (std::abs(run.times[k] - t) <= 0.5 * run.dt)
          write_state_csv(rep, "snapshot_linear_t" + format_number(t) + ".csv", comps, run.x, run.snapshots[k]);
    j["linear"] = {{"scheme", run.scheme}, {"dx", run.dx}, {"dt", run.dt}, {"X", run.X},
                   {"mass_drift", run.mass_drift}, {"fits", fits}};
  }
  if (sc.kind != "linear") {
    const auto& r = inst.nonlinear();
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < r.times.size(); ++k)
      rows.push_back({r.times[k], r.l1[k], r.l2[k], r.linf[k], r.delta_hat[k], r.delta_linear[k]});
    rep.write_csv("norms_nonlinear.csv", {"t", "L1", "L2", "Linf", "delta_hat", "delta_linear"}, rows);
    j["nonlinear"] = {{"amplitude", r.amplitude},
                      {"mass", r.mass},
                      {"predicted_shift", r.predicted_shift},
                      {"delta_final", r.delta_final},
                      {"max_abs_delta", r.max_abs_delta},
                      {"plateau_time", r.plateau_time},
                      {"linf_exponent", r.linf_fit.slope},
                      {"linf_r2", r.linf_fit.r2}};
  }
  write_json(rep, "simulate_report.json", j);
}

std::vector<int> selected_checks(const std::string& sub, const ExperimentConfig& cfg) {
  auto ids = default_criteria(sub);
  if (sub == "simulate") {
    if (cfg.simulate.kind == "linear") ids = {11, 15};
    if (cfg.simulate.kind == "nonlinear") ids = {13};
  }
  if (cfg.checks.empty()) return ids;
  std::vector<int> out;
  for (int id : ids)
    if (std::find(cfg.checks.begin(), cfg.checks.end(), id) != cfg.checks.end()) out.push_back(id);
  return out;
}

void export_all(const std::string& sub, Instance& inst, Report& rep) {
  if (sub == "profile" || sub == "verify-all") export_profile(inst, rep);
  if (sub == "hypotheses" || sub == "verify-all") export_hypotheses(inst, rep);
  if (sub == "evans" || sub == "verify-all") export_evans(inst, rep);
  if (sub == "scattering" || sub == "verify-all") export_scattering(inst, rep);
  if (sub == "greens" || sub == "verify-all") export_greens(inst, rep);
  if (sub == "simulate" || sub == "verify-all") export_simulate(inst, rep);
}

void write_failure(const std::filesystem::path& dir, const std::string& sub, const std::string& kind,
                   const std::string& message) {
  const ojson j = {{"subcommand", sub}, {"error_kind", kind}, {"message", message}};
  std::cerr << j.dump() << "\n";
  try {
    Report rep(dir);
    rep.write_text("failure.json", j.dump(2) + "\n");
  } catch (const std::exception&) {
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stability analysis of relaxation shock profiles"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::string config_path, out_dir;
  std::optional<unsigned> seed;
  std::optional<double> tol_scale;
  app.add_option("--config", config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "seed for randomized checks");
  app.add_option("--tol-scale", tol_scale, "multiplier on error tolerances")->check(CLI::PositiveNumber);
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"profile", "solve, verify and classify the shock profile"},
      {"hypotheses", "structural hypotheses, rates and dispersion curves"},
      {"evans", "Evans function contours and stability verdict"},
      {"scattering", "scattering coefficients and the shift functional"},
      {"greens", "Green's function field export and contour inversion check"},
      {"simulate", "linear and nonlinear time-dependent experiments"},
      {"verify-all", "full acceptance suite"}};
  for (const auto& [name, help] : subs) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  ExperimentConfig cfg;
  try {
    cfg = config_path.empty() ? reference_config() : load_config(config_path);
  } catch (const ConfigError& e) {
    const ojson j = {{"error_kind", "config"}, {"field", e.path()}, {"message", e.what()}};
    std::cerr << "config error: " << e.what() << "\n" << j.dump() << "\n";
    return 2;
  }
  if (!out_dir.empty()) cfg.out = std::filesystem::absolute(out_dir).lexically_normal();
  if (seed) cfg.seed = *seed;
  if (tol_scale) cfg.tol_scale = *tol_scale;

  try {
    Instance inst(cfg, static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
    Report rep(cfg.out);
    rep.write_text("config.json", config_to_json(cfg, false) + "\n");
    for (auto& line : run_criteria(selected_checks(sub, cfg), inst, true)) rep.add_check(std::move(line));
    export_all(sub, inst, rep);
    rep.finalize(sub, utc_timestamp());
    return rep.all_pass() ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const RelaxError& e) {
    write_failure(cfg.out, sub, to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    write_failure(cfg.out, sub, "internal", e.what());
    return 1;
  }
}

#include "relax/acceptance.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace relax;

namespace {

Vec as_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

py::dict contour_dict(const ContourReport& c) {
  std::vector<std::complex<double>> lam;
  std::vector<double> log_abs, arg;
  for (const auto& s : c.samples) {
    lam.push_back(s.lambda);
    log_abs.push_back(s.log_abs);
    arg.push_back(s.arg_unwound);
  }
  py::dict d;
  d["winding"] = c.winding;
  d["winding_real"] = c.winding_real;
  d["closed_ok"] = c.closed_ok;
  d["lambda"] = lam;
  d["log_abs"] = log_abs;
  d["arg_unwound"] = arg;
  return d;
}

py::object tri(Tri t) {
  if (t == Tri::Unknown) return py::none();
  return py::bool_(t == Tri::Pass);
}

}  // namespace

PYBIND11_MODULE(_relaxshock, m) {
  m.doc() = "Relaxation shock profiles, Evans function, Green's function and simulation";

  static py::exception<RelaxError> relax_error(m, "RelaxError", PyExc_RuntimeError);
  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      config_error(e.what());
    } catch (const RelaxError& e) {
      relax_error((std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  py::enum_<Side>(m, "Side").value("minus", Side::Minus).value("plus", Side::Plus);

  py::class_<RelaxationModel>(m, "RelaxationModel")
      .def_readonly("n", &RelaxationModel::n)
      .def_readonly("r", &RelaxationModel::r)
      .def_readonly("a", &RelaxationModel::a)
      .def_readonly("h_poly", &RelaxationModel::h_poly)
      .def_property_readonly("dim", &RelaxationModel::dim);
  m.def("make_jin_xin", &make_jin_xin, py::arg("n"), py::arg("a"), py::arg("h_poly"));

  py::class_<ShockData>(m, "ShockData")
      .def_readonly("u_minus", &ShockData::u_minus)
      .def_readonly("u_plus", &ShockData::u_plus)
      .def_readonly("v_minus", &ShockData::v_minus)
      .def_readonly("v_plus", &ShockData::v_plus)
      .def_readonly("s", &ShockData::s);
  m.def(
      "make_shock",
      [](const RelaxationModel& model, const std::vector<double>& um, const std::vector<double>& up,
         std::optional<double> s) {
        const Vec a = as_vec(um), b = as_vec(up);
        return make_shock(model, a, b, s ? *s : rankine_hugoniot_speed(model, a, b));
      },
      py::arg("model"), py::arg("u_minus"), py::arg("u_plus"), py::arg("s") = py::none());

  py::class_<Classification>(m, "Classification")
      .def_readonly("i", &Classification::i)
      .def_readonly("d", &Classification::d)
      .def_readonly("ell", &Classification::ell)
      .def_readonly("pure", &Classification::pure)
      .def_readonly("index_identity", &Classification::index_identity)
      .def_property_readonly("type", [](const Classification& c) { return std::string(to_string(c.type)); });
  m.def("classify", &classify, py::arg("model"), py::arg("shock"));

  py::class_<HypothesisReport>(m, "HypothesisReport")
      .def_readonly("theta_minus", &HypothesisReport::theta_minus)
      .def_readonly("theta_plus", &HypothesisReport::theta_plus)
      .def_readonly("theta_est", &HypothesisReport::theta_est)
      .def_readonly("h3_dissipative", &HypothesisReport::h3_dissipative)
      .def_readonly("messages", &HypothesisReport::messages)
      .def("all_pass", &HypothesisReport::all_pass);
  m.def("check_hypotheses", [](const RelaxationModel& model, const ShockData& sh) { return check_hypotheses(model, sh); },
        py::arg("model"), py::arg("shock"));
  m.def("dispersion_exact", &dispersion_exact, py::arg("model"), py::arg("shock"), py::arg("side"), py::arg("xi"));

  py::class_<ShockProfile>(m, "ShockProfile")
      .def_readonly("X", &ShockProfile::X)
      .def_readonly("dx", &ShockProfile::dx)
      .def_readonly("x", &ShockProfile::x)
      .def_readonly("u", &ShockProfile::u)
      .def_readonly("v", &ShockProfile::v)
      .def_readonly("du", &ShockProfile::du)
      .def_readonly("dv", &ShockProfile::dv)
      .def_readonly("classification", &ShockProfile::classification)
      .def_readonly("shock", &ShockProfile::shock)
      .def("state_at", &ShockProfile::state_at)
      .def_property_readonly("size", &ShockProfile::size);
  m.def(
      "solve_profile",
      [](const RelaxationModel& model, const ShockData& sh, double X, double dx) {
        ProfileOptions o;
        o.X = X;
        o.dx = dx;
        return solve_profile(model, sh, o);
      },
      py::arg("model"), py::arg("shock"), py::arg("X") = 0.0, py::arg("dx") = 0.05);

  py::class_<EvansContext>(m, "EvansContext")
      .def(py::init([](const ShockProfile& p) { return std::make_unique<EvansContext>(p); }), py::arg("profile"));
  m.def(
      "evans_value",
      [](const EvansContext& ctx, std::complex<double> lam) {
        const auto v = evans_value(ctx, lam);
        return py::make_tuple(v.log_abs, v.arg, v.k_stable);
      },
      py::arg("ctx"), py::arg("lam"), "(log|D|, arg D, stable dimension)");
  m.def(
      "stability_verdict",
      [](const EvansContext& ctx, double R, double eta1, double r0) {
        VerdictSettings vs;
        vs.outer.R = R;
        vs.outer.eta1 = eta1;
        vs.r0 = r0;
        const auto v = stability_verdict(ctx, vs);
        py::dict d;
        d["D1"] = tri(v.D1);
        d["D2"] = tri(v.D2);
        d["script_D"] = tri(v.script_D);
        d["winding_big"] = v.winding_big;
        d["winding_origin"] = v.winding_origin;
        d["delta"] = v.delta;
        d["ell"] = v.ell;
        d["outer"] = contour_dict(v.outer_report);
        d["origin"] = contour_dict(v.circle_report);
        return d;
      },
      py::arg("ctx"), py::arg("R") = 30.0, py::arg("eta1") = 0.05, py::arg("r0") = 0.05);

  py::class_<ScatteringTable>(m, "ScatteringTable")
      .def_readonly("pi", &ScatteringTable::pi)
      .def_readonly("delta", &ScatteringTable::delta)
      .def_readonly("mass", &ScatteringTable::mass)
      .def_readonly("pi_consistency", &ScatteringTable::pi_consistency)
      .def_property_readonly("c0", [](const ScatteringTable& t) {
        std::vector<double> c;
        for (const auto& e : t.entries) c.push_back(e.c0);
        return c;
      });
  m.def("scattering_solve", &scattering_solve, py::arg("profile"));
  m.def("errfn", &errfn, py::arg("z"));
  m.def(
      "green_apply",
      [](const ShockProfile& p, const ScatteringTable& t, const Mat& f, double time) {
        const auto g = green_apply(p, t, f, time);
        py::dict d;
        d["H"] = g.H;
        d["E"] = g.E;
        d["S"] = g.S;
        d["total"] = g.total();
        return d;
      },
      py::arg("profile"), py::arg("table"), py::arg("f"), py::arg("t"));
  m.def("H_apply", &H_apply, py::arg("profile"), py::arg("f"), py::arg("t"));
  m.def("shift_mode", &shift_mode, py::arg("profile"));
  m.def("l1_norm", &l1_norm, py::arg("profile"), py::arg("f"), py::arg("rows") = std::vector<int>{});

  m.def(
      "sim_grid",
      [](const ShockProfile& p, double T, double dx, double min_half_width) {
        SimOptions so;
        so.dx = dx;
        so.min_half_width = min_half_width;
        return sim_grid(p, T, so);
      },
      py::arg("profile"), py::arg("T"), py::arg("dx") = 0.0, py::arg("min_half_width") = 0.0);
  m.def(
      "evolve_linear",
      [](const ShockProfile& p, const Mat& U0, double T, std::vector<double> snapshot_times, double dx,
         double min_half_width) {
        SimOptions so;
        so.dx = dx;
        so.min_half_width = min_half_width;
        so.snapshot_times = std::move(snapshot_times);
        const auto run = evolve_linear(p, U0, T, so);
        py::dict d;
        d["scheme"] = run.scheme;
        d["x"] = run.x;
        d["times"] = run.times;
        d["snapshots"] = run.snapshots;
        d["mass_drift"] = run.mass_drift;
        d["dt"] = run.dt;
        return d;
      },
      py::arg("profile"), py::arg("U0"), py::arg("T"), py::arg("snapshot_times") = std::vector<double>{},
      py::arg("dx") = 0.0, py::arg("min_half_width") = 0.0);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_readonly("seed", &ExperimentConfig::seed)
      .def_readonly("tol_scale", &ExperimentConfig::tol_scale)
      .def_readonly("out", &ExperimentConfig::out)
      .def("to_json", [](const ExperimentConfig& c) { return config_to_json(c); });
  m.def("parse_config", &parse_config, py::arg("text"), py::arg("base_dir") = std::filesystem::path{});
  m.def("reference_config", &reference_config);
  m.def(
      "run_checks",
      [](const std::vector<int>& ids, std::optional<ExperimentConfig> cfg) {
        Instance inst(cfg ? *cfg : reference_config());
        py::list out;
        for (const auto& line : run_criteria(ids, inst)) {
          py::dict d;
          d["criterion"] = line.criterion;
          d["title"] = line.title;
          d["status"] = to_string(line.status);
          py::dict metrics;
          for (const auto& [k, v] : line.metrics) metrics[py::str(k)] = v;
          d["metrics"] = metrics;
          d["note"] = line.note;
          d["summary"] = line.summary();
          out.append(d);
        }
        return out;
      },
      py::arg("ids"), py::arg("config") = py::none(), "Acceptance criteria as dicts (1..15).");
}

#include "relax/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

namespace relax {

namespace {

using nlohmann::json;

// Walks one JSON object, remembering which keys were read so leftovers can
// be rejected.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json& get(const std::string& key, bool required) {
    seen_.insert(key);
    if (!j_.contains(key)) {
      if (required) throw ConfigError(at(key), "missing required key");
      static const json null_value;
      return null_value;
    }
    return j_.at(key);
  }

  void number(const std::string& key, double& out, bool required = false) {
    const json& v = get(key, required);
    if (v.is_null()) return;
    if (!v.is_number()) throw ConfigError(at(key), "expected a number");
    out = v.get<double>();
    if (!std::isfinite(out)) throw ConfigError(at(key), "must be finite");
  }

  void integer(const std::string& key, int& out, bool required = false) {
    const json& v = get(key, required);
    if (v.is_null()) return;
    if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
    out = v.get<int>();
  }

  void string(const std::string& key, std::string& out, bool required = false) {
    const json& v = get(key, required);
    if (v.is_null()) return;
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    out = v.get<std::string>();
  }

  // a scalar is accepted as a one-element list
  void numbers(const std::string& key, std::vector<double>& out, bool required = false) {
    const json& v = get(key, required);
    if (v.is_null()) return;
    if (v.is_number()) {
      out = {v.get<double>()};
      return;
    }
    if (!v.is_array()) throw ConfigError(at(key), "expected a number or an array of numbers");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(at(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path, what);
}

std::map<std::string, ModelFactory>& registry() {
  static std::map<std::string, ModelFactory> r;
  return r;
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

void parse_model(const json& j, ModelConfig& m) {
  Reader r(j, "model");
  r.string("kind", m.kind, true);
  r.integer("n", m.n, true);
  m.r = m.n;
  r.integer("r", m.r);
  r.numbers("u_minus", m.u_minus, true);
  r.numbers("u_plus", m.u_plus, true);
  double s = 0.0;
  if (r.has("s")) {
    r.number("s", s);
    m.s = s;
  }
  const bool jx = m.kind == "jin-xin";
  r.number("a", m.a, jx);
  r.numbers("h_poly", m.h_poly, jx);
  r.finish();

  require(m.n >= 1, "model.n", "must be >= 1");
  require(m.r >= 1, "model.r", "must be >= 1");
  require(static_cast<int>(m.u_minus.size()) == m.n, "model.u_minus", "length must equal n");
  require(static_cast<int>(m.u_plus.size()) == m.n, "model.u_plus", "length must equal n");
  if (jx) {
    require(m.r == m.n, "model.r", "jin-xin requires r = n");
    require(m.a > 0.0, "model.a", "must be positive");
    require(!m.h_poly.empty(), "model.h_poly", "must not be empty");
  } else {
    std::lock_guard lock(registry_mutex());
    require(registry().count(m.kind) > 0, "model.kind", "unknown model kind '" + m.kind + "'");
  }
}

void parse_positive(Reader& r, const std::string& key, double& out) {
  r.number(key, out);
  require(out > 0.0, r.at(key), "must be positive");
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  Reader top(j, "");
  parse_model(top.get("model", true), cfg.model);

  if (const json& g = top.get("grid", false); !g.is_null()) {
    Reader r(g, "grid");
    r.number("X", cfg.grid.X);
    parse_positive(r, "dx", cfg.grid.dx);
    r.finish();
  }
  if (const json& c = top.get("contour", false); !c.is_null()) {
    Reader r(c, "contour");
    parse_positive(r, "R", cfg.contour.R);
    parse_positive(r, "eta1", cfg.contour.eta1);
    parse_positive(r, "r0", cfg.contour.r0);
    r.number("max_step", cfg.contour.max_step);
    r.finish();
  }
  if (const json& g = top.get("greens", false); !g.is_null()) {
    Reader r(g, "greens");
    r.number("y0", cfg.greens.y0);
    r.numbers("times", cfg.greens.times);
    parse_positive(r, "contour_t", cfg.greens.contour_t);
    parse_positive(r, "Xi", cfg.greens.Xi);
    parse_positive(r, "domega", cfg.greens.domega);
    r.integer("order", cfg.greens.order);
    r.finish();
    require(cfg.greens.order >= 1 && cfg.greens.order <= 4, "greens.order", "must be in 1..4");
    for (double t : cfg.greens.times) require(t > 0.0, "greens.times", "times must be positive");
  }
  if (const json& s = top.get("simulate", false); !s.is_null()) {
    auto& sc = cfg.simulate;
    Reader r(s, "simulate");
    r.string("kind", sc.kind);
    parse_positive(r, "T", sc.T);
    parse_positive(r, "dx", sc.dx);
    r.number("decay_center", sc.decay_center);
    parse_positive(r, "decay_width", sc.decay_width);
    r.number("min_half_width", sc.min_half_width);
    r.numbers("snapshot_times", sc.snapshot_times);
    r.number("amplitude", sc.amplitude);
    r.string("shape", sc.shape);
    r.number("center", sc.center);
    parse_positive(r, "width", sc.width);
    r.finish();
    require(sc.kind == "linear" || sc.kind == "nonlinear" || sc.kind == "both", "simulate.kind",
            "expected linear, nonlinear or both");
    require(sc.shape == "gaussian" || sc.shape == "bump", "simulate.shape", "expected gaussian or bump");
    for (double t : sc.snapshot_times)
      require(t >= 0.0 && t <= sc.T, "simulate.snapshot_times", "times must lie in [0, T]");
  }
  if (const json& c = top.get("checks", false); !c.is_null()) {
    require(c.is_array(), "checks", "expected an array of criterion numbers");
    for (std::size_t i = 0; i < c.size(); ++i) {
      const std::string p = "checks[" + std::to_string(i) + "]";
      require(c[i].is_number_integer(), p, "expected an integer");
      const int id = c[i].get<int>();
      require(id >= 1 && id <= 15, p, "criterion numbers run from 1 to 15");
      cfg.checks.push_back(id);
    }
  }
  std::string out;
  top.string("out", out);
  if (!out.empty()) cfg.out = out;
  int seed = static_cast<int>(cfg.seed);
  top.integer("seed", seed);
  require(seed >= 0, "seed", "must be non-negative");
  cfg.seed = static_cast<unsigned>(seed);
  parse_positive(top, "tol_scale", cfg.tol_scale);
  top.finish();

  if (cfg.out.is_relative()) cfg.out = (base_dir.empty() ? std::filesystem::current_path() : base_dir) / cfg.out;
  cfg.out = cfg.out.lexically_normal();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("", "cannot read config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::filesystem::absolute(file).parent_path());
}

ExperimentConfig reference_config() {
  ExperimentConfig cfg;
  cfg.out = std::filesystem::current_path() / cfg.out;
  return cfg;
}

bool is_reference_instance(const ModelConfig& m) {
  return m.kind == "jin-xin" && m.n == 1 && m.a == 2.0 && m.h_poly == std::vector<double>{0.0, 0.0, 0.5} &&
         m.u_minus == std::vector<double>{1.0} && m.u_plus == std::vector<double>{-1.0} && m.s.value_or(0.0) == 0.0;
}

std::string config_to_json(const ExperimentConfig& cfg, bool with_out) {
  json m = {{"kind", cfg.model.kind}, {"n", cfg.model.n},           {"r", cfg.model.r},
            {"a", cfg.model.a},       {"h_poly", cfg.model.h_poly}, {"u_minus", cfg.model.u_minus},
            {"u_plus", cfg.model.u_plus}};
  if (cfg.model.s) m["s"] = *cfg.model.s;
  const auto& sc = cfg.simulate;
  json j = {
      {"model", m},
      {"grid", {{"X", cfg.grid.X}, {"dx", cfg.grid.dx}}},
      {"contour",
       {{"R", cfg.contour.R}, {"eta1", cfg.contour.eta1}, {"r0", cfg.contour.r0}, {"max_step", cfg.contour.max_step}}},
      {"greens",
       {{"y0", cfg.greens.y0},
        {"times", cfg.greens.times},
        {"contour_t", cfg.greens.contour_t},
        {"Xi", cfg.greens.Xi},
        {"domega", cfg.greens.domega},
        {"order", cfg.greens.order}}},
      {"simulate",
       {{"kind", sc.kind},
        {"T", sc.T},
        {"dx", sc.dx},
        {"decay_center", sc.decay_center},
        {"decay_width", sc.decay_width},
        {"min_half_width", sc.min_half_width},
        {"snapshot_times", sc.snapshot_times},
        {"amplitude", sc.amplitude},
        {"shape", sc.shape},
        {"center", sc.center},
        {"width", sc.width}}},
      {"checks", cfg.checks},
      {"out", cfg.out.string()},
      {"seed", cfg.seed},
      {"tol_scale", cfg.tol_scale}};
  if (!with_out) j.erase("out");
  return j.dump(2);
}

void register_model(const std::string& kind, ModelFactory factory) {
  if (kind == "jin-xin") throw RelaxError(ErrorKind::InvalidInput, "register_model: 'jin-xin' is built in");
  std::lock_guard lock(registry_mutex());
  registry()[kind] = std::move(factory);
}

RelaxationModel build_model(const ModelConfig& m) {
  if (m.kind == "jin-xin") return make_jin_xin(m.n, m.a, m.h_poly);
  ModelFactory f;
  {
    std::lock_guard lock(registry_mutex());
    auto it = registry().find(m.kind);
    if (it == registry().end()) throw ConfigError("model.kind", "unknown model kind '" + m.kind + "'");
    f = it->second;
  }
  return f(m);
}

ShockData build_shock(const RelaxationModel& model, const ModelConfig& m) {
  const Vec um = Eigen::Map<const Vec>(m.u_minus.data(), static_cast<Eigen::Index>(m.u_minus.size()));
  const Vec up = Eigen::Map<const Vec>(m.u_plus.data(), static_cast<Eigen::Index>(m.u_plus.size()));
  const double s = m.s ? *m.s : rankine_hugoniot_speed(model, um, up);
  return make_shock(model, um, up, s);
}

}  // namespace relax

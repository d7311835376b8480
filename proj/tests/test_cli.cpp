#include "doctest.h"
#include "relax/acceptance.hpp"

#include <json.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace relax;
namespace fs = std::filesystem;

namespace {

const char* kReference = R"({
  "model": {"kind": "jin-xin", "n": 1, "a": 2.0, "h_poly": [0, 0, 0.5], "u_minus": [1], "u_plus": [-1], "s": 0},
  "grid": {"dx": 0.05},
  "seed": 7
})";

fs::path scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("relaxshock-cli-" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunResult {
  int status = -1;
  std::string err;
};

RunResult run_cli(const std::string& args, const std::string& tag) {
  const char* bin = std::getenv("RELAXSHOCK_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "RELAXSHOCK_BIN is not set");
  const fs::path err = scratch() / (tag + ".stderr");
  const std::string cmd = std::string(bin) + " " + args + " > " + (scratch() / (tag + ".stdout")).string() + " 2> " +
                          err.string();
  const int rc = std::system(cmd.c_str());
  return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, read_file(err)};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = parse_config(kReference, "/tmp/base");
  CHECK(is_reference_instance(cfg.model));
  CHECK(cfg.out == fs::path("/tmp/base/relaxshock-out"));
  CHECK(cfg.model.s.has_value());

  // scalars are accepted where a vector is expected
  const auto c2 = parse_config(
      R"({"model": {"kind": "jin-xin", "n": 1, "a": 2, "h_poly": [0, 0, 0.5], "u_minus": 1, "u_plus": -1}, "out": "/x"})");
  CHECK(c2.model.u_minus == std::vector<double>{1.0});
  CHECK(c2.out == fs::path("/x"));
  CHECK(is_reference_instance(c2.model));

  auto path_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.path();
    }
    return std::string("<none>");
  };
  CHECK(path_of(R"({"model": {"kind": "jin-xin", "n": 1, "h_poly": [0], "u_minus": [1], "u_plus": [-1]}})") ==
        "model.a");
  CHECK(path_of(R"({"model": {"kind": "jin-xin", "n": 1, "a": 2, "h_poly": [0], "u_minus": [1], "u_plus": [-1],
                              "extra": 0}})") == "model.extra");
  CHECK(path_of(R"({"model": {"kind": "jin-xin", "n": 1, "a": 2, "h_poly": [0], "u_minus": [1], "u_plus": [-1]},
                    "checks": [3, 99]})") == "checks[1]");
  CHECK(path_of(R"({"model": {"kind": "jin-xin", "n": 1, "a": -2, "h_poly": [0], "u_minus": [1], "u_plus": [-1]}})") ==
        "model.a");
  CHECK(path_of(R"({"model": {"kind": "lattice", "n": 1, "u_minus": [1], "u_plus": [-1]}})") == "model.kind");
  CHECK(path_of(R"({"model": {"kind": "jin-xin", "n": 1, "a": 2, "h_poly": [0], "u_minus": [1], "u_plus": [-1]},
                    "simulate": {"T": "long"}})") == "simulate.T");
  CHECK(path_of("{not json") == "");

  // the echo parses back to the same settings
  const auto again = parse_config(config_to_json(cfg));
  CHECK(config_to_json(again) == config_to_json(cfg));
}

TEST_CASE("custom model registration") {
  register_model("scaled-burgers", [](const ModelConfig& m) { return make_jin_xin(m.n, 3.0, {0.0, 0.0, 0.5}); });
  const auto cfg = parse_config(
      R"({"model": {"kind": "scaled-burgers", "n": 1, "u_minus": [1], "u_plus": [-1]}})");
  CHECK_FALSE(is_reference_instance(cfg.model));
  CHECK(build_model(cfg.model).a == 3.0);
  CHECK_THROWS_AS(register_model("jin-xin", {}), RelaxError);

  // closed-form checks do not apply away from the reference shock
  Instance inst(cfg);
  CHECK(run_criterion(1, inst).status == Status::Skip);
  CHECK(run_criterion(8, inst).status == Status::Skip);
}

TEST_CASE("checksums and report plumbing") {
  CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");

  Report empty(scratch() / "empty");
  CHECK_THROWS_AS(empty.finalize("profile", "t0"), RelaxError);

  Report rep(scratch() / "plumbing");
  rep.write_csv("b.csv", {"k", "v"}, std::vector<std::vector<double>>{{1, 2.5}});
  rep.write_csv("a.csv", {"name"}, std::vector<std::vector<std::string>>{{"x,y"}});
  CHECK(read_file(rep.dir() / "a.csv") == "name\n\"x,y\"\n");
  CHECK_THROWS_AS(rep.write_csv("c.csv", {"k", "v"}, std::vector<std::vector<double>>{{1}}), RelaxError);
  CheckLine line;
  line.criterion = 4;
  line.title = "demo";
  line.status = Status::Pass;
  line.metrics = {{"theta", 0.25}};
  CHECK(line.summary() == "PASS [ 4] demo: theta=0.25");
  rep.add_check(line);
  rep.finalize("demo", "t1");
  const auto idx = nlohmann::json::parse(read_file(rep.dir() / "index.json"));
  CHECK(idx["generated_at"] == "t1");
  REQUIRE(idx["artifacts"].size() == 4);
  CHECK(idx["artifacts"][0]["name"] == "a.csv");  // sorted
  for (const auto& a : idx["artifacts"])
    CHECK(a["fnv1a64"] == hex64(fnv1a64(read_file(rep.dir() / a["name"].get<std::string>()))));
  // the summary number appears in checks.csv
  CHECK(read_file(rep.dir() / "checks.csv").find("4,demo,PASS,theta,0.25") != std::string::npos);
  // only the timestamp differs between repeated indexes
  const std::string i1 = rep.index_json("demo", "t1"), i2 = rep.index_json("demo", "t2");
  CHECK(i1 != i2);
  CHECK(nlohmann::json::parse(i1).erase("generated_at") == nlohmann::json::parse(i2).erase("generated_at"));
}

TEST_CASE("profile subcommand writes the closed-form profile") {
  const auto cfg = write_file("ref.json", kReference);
  const auto out = scratch() / "profile1";
  const auto r = run_cli("profile --config " + cfg.string() + " --out " + out.string(), "profile1");
  CHECK(r.status == 0);
  const auto rows = read_csv(out / "profile.csv");
  REQUIRE(rows.size() > 2000);
  CHECK(rows[0] == std::vector<std::string>{"x", "u", "v", "du", "dv"});
  double err = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double x = std::stod(rows[i][0]), u = std::stod(rows[i][1]);
    err = std::max(err, std::abs(u + std::tanh(x / 8.0)));
  }
  CHECK(err <= 1e-8);
  const std::string summary = read_file(out / "summary.txt");
  CHECK(summary.find("PASS [ 1]") == 0);
  CHECK(summary.find("PASS [ 2]") != std::string::npos);

  // deterministic apart from the timestamp
  const auto out2 = scratch() / "profile2";
  CHECK(run_cli("profile --config " + cfg.string() + " --out " + out2.string(), "profile2").status == 0);
  auto i1 = nlohmann::json::parse(read_file(out / "index.json"));
  auto i2 = nlohmann::json::parse(read_file(out2 / "index.json"));
  i1.erase("generated_at");
  i2.erase("generated_at");
  CHECK(i1 == i2);
}

TEST_CASE("evans subcommand verdict") {
  const auto cfg = write_file("ref.json", kReference);
  const auto out = scratch() / "evans";
  const auto r = run_cli("evans --config " + cfg.string() + " --out " + out.string(), "evans");
  CHECK(r.status == 0);
  const auto v = nlohmann::json::parse(read_file(out / "verdict.json"));
  CHECK(v["D1"] == true);
  CHECK(v["D2"] == true);
  CHECK(v["script_D"] == true);
  CHECK(v["winding_big"] == 0);
  CHECK(v["winding_origin"] == 1);
  CHECK(v["ell"] == 1);
  const auto rows = read_csv(out / "contour_outer.csv");
  CHECK(rows[0] ==
        std::vector<std::string>{"idx", "re_lambda", "im_lambda", "log_abs_D", "arg_unwound", "k_stable"});
  CHECK(rows.size() > 50);
}

TEST_CASE("scattering subcommand and checks selection") {
  const std::string text = std::string(kReference).replace(std::string(kReference).rfind('}'), 1, R"(, "checks": [2]})");
  const auto cfg = write_file("sel.json", text);
  const auto out = scratch() / "scat";
  CHECK(run_cli("scattering --config " + cfg.string() + " --out " + out.string(), "scat").status == 0);
  const auto s = nlohmann::json::parse(read_file(out / "scattering.json"));
  CHECK(s["pi"][0] == 0.5);
  CHECK(s["entries"][0]["c0"] == 0.5);
  // criterion 8 was not selected
  CHECK(read_file(out / "summary.txt").empty());
}

TEST_CASE("schema violations exit with status 2") {
  const auto bad = write_file("missing_a.json", R"({"model": {"kind": "jin-xin", "n": 1, "h_poly": [0, 0, 0.5],
                                                   "u_minus": [1], "u_plus": [-1]}})");
  const auto r = run_cli("profile --config " + bad.string() + " --out " + (scratch() / "bad").string(), "bad");
  CHECK(r.status == 2);
  CHECK(r.err.find("model.a") != std::string::npos);

  const auto unk = write_file("unknown.json", R"({"model": {"kind": "jin-xin", "n": 1, "a": 2, "h_poly": [0, 0, 0.5],
                                                 "u_minus": [1], "u_plus": [-1]}, "grid": {"dy": 1}})");
  const auto r2 = run_cli("profile --config " + unk.string(), "unknown");
  CHECK(r2.status == 2);
  CHECK(r2.err.find("grid.dy") != std::string::npos);

  CHECK(run_cli("profile --tol-scale -1", "negtol").status == 2);
  CHECK(run_cli("frobnicate", "nosub").status == 2);
}

TEST_CASE("numerical failure exits with status 1 and a diagnostic") {
  const auto cfg = write_file("flat.json", R"({"model": {"kind": "jin-xin", "n": 1, "a": 2, "h_poly": [0, 0, 0.5],
                                               "u_minus": [1], "u_plus": [1]}})");
  const auto out = scratch() / "flat";
  const auto r = run_cli("profile --config " + cfg.string() + " --out " + out.string(), "flat");
  CHECK(r.status == 1);
  const auto j = nlohmann::json::parse(read_file(out / "failure.json"));
  CHECK(j["error_kind"] == "degenerate");
  CHECK(j["subcommand"] == "profile");
}

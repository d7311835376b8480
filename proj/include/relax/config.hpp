#pragma once

#include "relax/model.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace relax {

/// Schema violation; `path` is the dotted field path ("model.a").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct ModelConfig {
  std::string kind = "jin-xin";
  int n = 1;
  int r = 1;
  double a = 2.0;
  std::vector<double> h_poly = {0.0, 0.0, 0.5};
  std::vector<double> u_minus = {1.0};
  std::vector<double> u_plus = {-1.0};
  std::optional<double> s;  // Rankine–Hugoniot speed when absent
};

struct GridConfig {
  double X = 0.0;  // <= 0: automatic
  double dx = 0.05;
};

struct ContourConfig {
  double R = 30.0;
  double eta1 = 0.05;
  double r0 = 0.05;
  double max_step = 0.0;  // <= 0: length / 200
};

struct GreensConfig {
  double y0 = -10.0;
  std::vector<double> times = {10.0, 20.0, 30.0, 40.0};
  double contour_t = 1.0;
  double Xi = 200.0;
  double domega = 0.5;
  int order = 2;
};

struct SimulateConfig {
  std::string kind = "both";  // linear | nonlinear | both
  double T = 100.0;
  double dx = 0.05;
  double decay_center = -250.0;  // linear run: Gaussian data
  double decay_width = 5.0;
  double min_half_width = 480.0;
  std::vector<double> snapshot_times;  // CSV snapshots; empty: none
  double amplitude = 0.01;             // nonlinear run
  std::string shape = "gaussian";      // gaussian | bump
  double center = 0.0;
  double width = 1.0;
};

struct ExperimentConfig {
  ModelConfig model;
  GridConfig grid;
  ContourConfig contour;
  GreensConfig greens;
  SimulateConfig simulate;
  std::vector<int> checks;  // criteria to run; empty: the subcommand's default set
  std::filesystem::path out = "relaxshock-out";
  unsigned seed = 7;
  double tol_scale = 1.0;
};

/// Parses and validates; unknown keys and type errors throw ConfigError.
/// Relative output paths are resolved against `base_dir`.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& file);

/// The Jin–Xin Burgers shock u- = 1, u+ = -1, a = 2.
ExperimentConfig reference_config();

/// True for the instance whose closed-form oracles the reference checks use.
bool is_reference_instance(const ModelConfig& m);

/// Without the output path when `with_out` is false (location-independent).
std::string config_to_json(const ExperimentConfig& cfg, bool with_out = true);

using ModelFactory = std::function<RelaxationModel(const ModelConfig&)>;

/// Custom kinds resolved by `build_model`; "jin-xin" is built in.
void register_model(const std::string& kind, ModelFactory factory);

RelaxationModel build_model(const ModelConfig& m);
ShockData build_shock(const RelaxationModel& model, const ModelConfig& m);

}  // namespace relax

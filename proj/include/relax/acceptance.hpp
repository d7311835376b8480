#pragma once

#include "relax/config.hpp"
#include "relax/greens.hpp"
#include "relax/report.hpp"
#include "relax/simulate.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace relax {

/// Model, profile and expensive intermediate results built once per config
/// and shared by the checks and the artifact writers.
class Instance {
 public:
  explicit Instance(ExperimentConfig cfg, int evans_threads = 1);

  const ExperimentConfig& config() const { return cfg_; }
  bool reference() const { return reference_; }
  int threads() const { return threads_; }
  const RelaxationModel& model() const { return model_; }
  const ShockData& shock() const { return shock_; }

  const ShockProfile& profile();
  const EvansContext& evans();
  const ScatteringTable& table();
  const StabilityVerdict& verdict();
  VerdictSettings verdict_settings() const;

  /// Linear run from a Gaussian far upstream, with decay fits (p = 1, 2, inf).
  const SimRun& decay_run();
  const std::vector<DecayFit>& decay_fits();
  /// Nonlinear perturbation of the profile.
  const NonlinearReport& nonlinear();
  /// Near-delta data at greens.y0 against H + E + S.
  const std::vector<GreensCompareRow>& greens_rows();

  /// Smooth data for the contour-inversion check, on the profile grid.
  Mat smooth_data();
  struct ContourCheck {
    ContourGreenResult result;
    Mat simulated;  // on the profile grid
    double rel_l1 = 0.0;
  };
  /// contour_green of smooth_data at greens.contour_t against the simulator.
  const ContourCheck& contour_check();
  double nonlinear_shape(double x) const;

 private:
  ExperimentConfig cfg_;
  bool reference_ = false;
  int threads_ = 1;
  RelaxationModel model_;
  ShockData shock_;
  std::optional<ShockProfile> profile_;
  std::unique_ptr<EvansContext> evans_;
  std::optional<ScatteringTable> table_;
  std::optional<StabilityVerdict> verdict_;
  std::optional<SimRun> decay_run_;
  std::optional<std::vector<DecayFit>> decay_fits_;
  std::optional<NonlinearReport> nonlinear_;
  std::optional<std::vector<GreensCompareRow>> greens_rows_;
  std::optional<ContourCheck> contour_;
};

/// Titles of criteria 1..15.
const char* criterion_title(int id);

/// Runs one criterion; numerical failures become FAIL lines carrying the
/// error text. Criteria built on closed-form values of the reference shock
/// are SKIP on other instances.
CheckLine run_criterion(int id, Instance& inst);

std::vector<CheckLine> run_criteria(const std::vector<int>& ids, Instance& inst, bool print = false);

/// Criteria each CLI subcommand reports by default.
std::vector<int> default_criteria(const std::string& subcommand);

}  // namespace relax

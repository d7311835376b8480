#pragma once

#include "relax/greens.hpp"

#include <functional>
#include <string>
#include <vector>

namespace relax {

struct SimOptions {
  double dx = 0.0;            // <= 0: profile spacing
  double margin = 10.0;       // extra padding beyond the signal reach
  double min_half_width = 0;  // domain is at least [-min_half_width, min_half_width]
  double cfl = 0.9;           // upwind schemes only
  std::vector<double> snapshot_times;  // rounded to whole steps; T always included
  bool keep_snapshots = true;
};

struct NormSample {
  double t = 0.0;
  double L1 = 0.0, L2 = 0.0, Linf = 0.0;
  double u_mass = 0.0;      // first conserved component
  double delta_hat = 0.0;   // nonlinear runs
  double support_lo = 0.0, support_hi = 0.0;  // nonzero cells
};

struct SimRun {
  std::string scheme;  // "exact-transport" or "rusanov"
  double X = 0.0, dx = 0.0, dt = 0.0;
  std::vector<double> x;
  Mat initial;
  std::vector<double> times;
  std::vector<Mat> snapshots;
  std::vector<NormSample> trace;
  Vec mass0;              // conserved components at t = 0
  double mass_drift = 0.0;  // max |mass(t) - mass0| / (1 + |mass0|)
  double max_speed = 0.0;
};

/// Cell centres of the padded simulation grid, aligned with the profile grid.
std::vector<double> sim_grid(const ShockProfile& profile, double T, const SimOptions& opts = {});

Mat sample_on(const std::vector<double>& x, int rows, const std::function<Vec(double)>& fn);

/// U_t = -(A U)_x + Q U with coefficients along the profile (endstates outside).
/// U0 is N x size(sim_grid(profile, T, opts)).
SimRun evolve_linear(const ShockProfile& profile, const Mat& U0, double T, const SimOptions& opts = {});

/// Full system in the shock frame; Dirichlet endstate values at the edges.
SimRun evolve_nonlinear(const ShockProfile& profile, const Mat& W0, double T, const SimOptions& opts = {});

struct DecayFit {
  double p = 0.0;  // infinity as +inf
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
  int samples = 0;
  double t_lo = 0.0, t_hi = 0.0;
};

/// Fits log ||U - phi||_p against log(1 + t) over [t_lo, t_hi] (at least one
/// decade), phi = delta(t) dU/d delta with delta from the e kernel.
std::vector<DecayFit> decay_report(const SimRun& run, const ShockProfile& profile, const ScatteringTable& table,
                                   const std::vector<double>& p_list, double t_lo = 10.0, double t_hi = -1.0);

struct GreensCompareRow {
  double t = 0.0;
  std::vector<double> rel_error;  // per component, relative L1 on the profile grid
  double support_lo = 0.0, support_hi = 0.0;
  double cone_lo = 0.0, cone_hi = 0.0;
  bool support_ok = false;
};

/// Unit-mass hat of width 3 dx at y0 in `component`, simulated and compared
/// with green_apply.
std::vector<GreensCompareRow> greens_compare(const ShockProfile& profile, const ScatteringTable& table, double y0,
                                             const std::vector<double>& times, int component = 0);

struct NonlinearReport {
  double amplitude = 0.0;
  double mass = 0.0;              // int of the u-perturbation
  double predicted_shift = 0.0;   // pi . int perturbation
  std::vector<double> times, delta_hat, linf, delta_linear;
  std::vector<double> l1, l2;     // of the shifted perturbation
  DecayFit linf_fit;
  double delta_final = 0.0;
  double max_abs_delta = 0.0;
  double plateau_time = -1.0;     // first t after which delta_hat stays within 10% of the prediction
};

/// W0 = profile + amplitude * shape(x) in the first u component.
NonlinearReport nonlinear_experiment(const ShockProfile& profile, const ScatteringTable& table, double amplitude,
                                     const std::function<double(double)>& shape, double T = 100.0,
                                     double dt_snap = 1.0);

/// argmin over delta of || W - Ubar(. - delta) ||_2 (golden section).
double fit_shift(const ShockProfile& profile, const std::vector<double>& x, const Mat& W, double guess = 0.0,
                 double half_width = 1.0);

}  // namespace relax

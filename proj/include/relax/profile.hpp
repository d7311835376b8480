#pragma once

#include "relax/model.hpp"

#include <string>
#include <vector>

namespace relax {

enum class ShockType { Lax, Overcompressive, Undercompressive, Mixed, None };

const char* to_string(ShockType t);

struct Classification {
  int i_minus = 0;  // unstable dim of df*(u-) - s
  int i_plus = 0;   // stable dim of df*(u+) - s
  int i = 0;
  int d_minus = 0;  // unstable dim of the reduced traveling-wave matrix at u-
  int d_plus = 0;   // stable dim at u+
  int d = 0;
  int ell = 1;
  ShockType type = ShockType::None;
  bool pure = false;
  bool extreme = false;
  bool index_identity = false;  // d - r == i - n
};

/// Sign counts only; throws Degenerate for u- == u+ and IndexMismatch when
/// d - r != i - n.
Classification classify(const RelaxationModel& model, const ShockData& shock);

/// Relaxation shock profile sampled on a uniform grid x_k = -X + k dx with
/// x = 0 at the centre index (phase condition location).
struct ShockProfile {
  RelaxationModel model;
  ShockData shock;
  double X = 0.0;
  double dx = 0.0;
  std::vector<double> x;
  Mat u, v;    // n x M and r x M
  Mat du, dv;  // derivatives
  double nu_minus = 0.0;  // predicted tail rates from the reduced traveling-wave matrix
  double nu_plus = 0.0;
  Classification classification;
  bool constant_state = false;

  int size() const { return static_cast<int>(x.size()); }
  int dim() const { return model.dim(); }
  int centre() const { return size() / 2; }
  /// Full state (u, v) at grid index k.
  Vec state(int k) const;
  Vec derivative(int k) const;
  /// Cubic Hermite interpolation; endstates outside [-X, X].
  Vec state_at(double xq) const;
  Vec derivative_at(double xq) const;
  Vec endstate(Side side) const;
};

struct ProfileOptions {
  /// Half-width; <= 0 selects max(40, 16 / nu_min).
  double X = 0.0;
  double dx = 0.05;
  int substeps = 4;
  double shoot_eps = 1e-8;
};

/// Predicted exponential tail rates (nu_minus, nu_plus) of the profile.
std::pair<double, double> predicted_tail_rates(const RelaxationModel& model, const ShockData& shock);

double default_half_width(const RelaxationModel& model, const ShockData& shock);

/// Jin–Xin models integrate the scalar profile ODE per component; custom
/// models are shot from the one-dimensional unstable manifold at u-.
ShockProfile solve_profile(const RelaxationModel& model, const ShockData& shock, const ProfileOptions& opts = {});
ShockProfile solve_profile(const RelaxationModel& model, const ShockData& shock, double X, double dx);

/// Trivial "profile" U == (u, v*(u)), used as a no-shock reference.
ShockProfile constant_state_profile(const RelaxationModel& model, const Vec& u, double s, double X, double dx);

struct TailFit {
  double rate = 0.0;
  double r2 = 0.0;
  double predicted = 0.0;
  double relative_error = 0.0;
  int samples = 0;
};

struct ProfileReport {
  double rh_residual = 0.0;
  double first_integral_drift = 0.0;
  double endstate_error_minus = 0.0;
  double endstate_error_plus = 0.0;
  TailFit tail_minus, tail_plus;
  bool endstates_ok = false;
  bool first_integral_ok = false;
  bool tails_exponential = false;
  bool rates_match = false;
  std::vector<std::string> flags;
  bool ok() const { return endstates_ok && first_integral_ok && tails_exponential && rates_match; }
};

ProfileReport verify_profile(const ShockProfile& profile);

/// Tail fit of log|U - U_side| over the outer half of the grid on that side.
TailFit fit_tail(const ShockProfile& profile, Side side);

}  // namespace relax

#pragma once

#include "relax/common.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace relax {

using Field = std::function<Vec(const Vec& u, const Vec& v)>;
using FieldJacobian = std::function<Mat(const Vec& u, const Vec& v)>;

enum class ModelKind { JinXin, Custom };

/// Relaxation system (u,v)_t + (f,g)_x = (0,q) with u in R^n, v in R^r.
///
/// Jacobian callables may be left empty, in which case central differences
/// with step 1e-6 (1 + |w|) are used.
struct RelaxationModel {
  ModelKind kind = ModelKind::Custom;
  int n = 0;
  int r = 0;
  Field f, g, q;
  FieldJacobian f_u, f_v, g_u, g_v, q_u, q_v;
  std::function<Vec(const Vec& u)> v_star;

  // Jin–Xin parameters: u_t + v_x = 0, v_t + a^2 u_x = h(u) - v, h applied
  // componentwise as the polynomial sum_k h_poly[k] u^k.
  double a = 0.0;
  std::vector<double> h_poly;

  /// (df,dg) is independent of the state (discrete kinetic model).
  bool constant_principal_part = false;

  int dim() const { return n + r; }
};

RelaxationModel make_jin_xin(int n, double a, std::vector<double> h_poly);

double poly_eval(const std::vector<double>& c, double x);
double poly_deriv(const std::vector<double>& c, double x);

/// Endstates and speed of a relaxation shock.
struct ShockData {
  Vec u_minus, u_plus;
  Vec v_minus, v_plus;
  double s = 0.0;
};

struct ShockOptions {
  double speed_margin = 1e-8;
};

/// Builds endstates on the equilibrium manifold and validates Rankine–Hugoniot
/// and noncharacteristic conditions.
ShockData make_shock(const RelaxationModel& model, const Vec& u_minus, const Vec& u_plus, double s,
                     const ShockOptions& opts = {});

/// Jin–Xin/scalar convenience: speed from Rankine–Hugoniot.
double rankine_hugoniot_speed(const RelaxationModel& model, const Vec& u_minus, const Vec& u_plus);

// ---------------------------------------------------------------------------
// Jacobians

struct StateJacobians {
  Mat f_u, f_v, g_u, g_v, q_u, q_v;
};

StateJacobians state_jacobians(const RelaxationModel& model, const Vec& u, const Vec& v);

/// A = (df,dg)^t and Q = (0; dq)^t, both (n+r) x (n+r), in the lab frame.
struct LinearizedCoefficients {
  Mat A;
  Mat Q;
};

/// Throws NonFinite or NonHyperbolic (complex spectrum of A beyond 1e-10).
LinearizedCoefficients jacobians(const RelaxationModel& model, const Vec& u, const Vec& v);

/// Same as `jacobians` but A is shifted to the frame moving with speed s.
LinearizedCoefficients frame_jacobians(const RelaxationModel& model, const Vec& u, const Vec& v, double s);

// ---------------------------------------------------------------------------
// Equilibrium reduction

struct EquilibriumData {
  Vec f_star;
  Mat df_star;
  Vec speeds;  // ascending
  Mat right;   // columns r*_j
  Mat left;    // rows l*_j^t
};

/// f*(u) = f(u, v*(u)), df* = f_u - f_v q_v^{-1} q_u. Throws Singular for
/// singular q_v and Defective / NonHyperbolic for a bad df*.
EquilibriumData equilibrium_data(const RelaxationModel& model, const Vec& u);

struct ChapmanEnskog {
  Mat B;                      // n x n
  std::vector<Mat> beta;      // per distinct equilibrium speed, m_j x m_j
  std::vector<double> speed;  // equilibrium speed of each block
  std::vector<int> multiplicity;
  /// Scalar rates, one per equilibrium eigenvector (diagonal of l* B r*).
  Vec beta_diag;
};

/// B* = -f_v q_v^{-1} (g*_u - v*_u f*_u), beta*_j = l*_j B* r*_j.
ChapmanEnskog chapman_enskog(const RelaxationModel& model, const Vec& u);

// ---------------------------------------------------------------------------
// Characteristic (frozen) modes

struct CharacteristicModes {
  std::vector<double> speed;   // distinct, ascending
  std::vector<int> multiplicity;
  std::vector<Mat> right;      // N x m_j
  std::vector<Mat> left;       // m_j x N, left_j * right_k = delta_jk I
  std::vector<Mat> eta;        // m_j x m_j, eta_j = -l_j Q r_j
  int family_count() const { return static_cast<int>(speed.size()); }
};

/// Eigenvalues of A - s within 1e-8 (1 + |A|) are grouped into one family.
CharacteristicModes hyperbolic_modes(const RelaxationModel& model, const Vec& u, const Vec& v, double s = 0.0);
CharacteristicModes hyperbolic_modes(const Mat& A, const Mat& Q);

/// Equilibrium modes lifted to R^{n+r}: R*_j = (r*_j; -q_v^{-1} q_u r*_j), L*_j = (l*_j; 0).
struct ModeData {
  CharacteristicModes characteristic;
  EquilibriumData equilibrium;
  ChapmanEnskog chapman_enskog;
  Mat R_star;  // (n+r) x n
  Mat L_star;  // n x (n+r), rows
};

ModeData mode_data(const RelaxationModel& model, const Vec& u, double s = 0.0);

// ---------------------------------------------------------------------------
// Hypotheses

struct HypothesisOptions {
  double xi_min = 1e-3;
  double xi_max = 1e3;
  int xi_count = 400;
  int segment_samples = 21;
  double speed_margin = 1e-8;
};

struct HypothesisReport {
  bool h1_constant_multiplicity = false;
  std::vector<int> h1_pattern;
  bool h2_equilibrium_hyperbolic = false;
  bool h2_noncharacteristic = false;
  double theta_minus = 0.0;
  double theta_plus = 0.0;
  double theta_est = 0.0;
  bool h3_dissipative = false;
  /// Interior dissipativity along the straight segment (report only).
  double theta_interior = 0.0;
  bool interior_warning = false;
  std::optional<bool> subcharacteristic;  // Jin–Xin only
  double subcharacteristic_margin = 0.0;
  bool eta_positive = false;
  bool beta_positive = false;
  std::vector<std::string> messages;
  bool all_pass() const;
};

/// Failures are reported in the returned object, never thrown.
HypothesisReport check_hypotheses(const RelaxationModel& model, const ShockData& shock,
                                  const HypothesisOptions& opts = {});

/// theta(xi) = -max Re sigma(-i xi A + Q) (1 + xi^2) / xi^2 minimized over a log grid.
double dissipativity_constant(const Mat& A, const Mat& Q, const std::vector<double>& xis);

// ---------------------------------------------------------------------------
// Dispersion relation

/// Eigenvalues of -i xi (A - s) + Q at the chosen endstate.
CVec dispersion_exact(const RelaxationModel& model, const ShockData& shock, Side side, double xi);

/// Eigenvalue branches along a xi sweep, labels kept continuous by nearest
/// neighbour assignment (each entry aligned with the previous one).
std::vector<CVec> dispersion_sweep(const RelaxationModel& model, const ShockData& shock, Side side,
                                   const std::vector<double>& xis);

/// Reorders `next` to best match `prev` (minimal total distance assignment).
CVec match_branches(const CVec& prev, const CVec& next);

/// Same assignment as a permutation: next(perm[i]) pairs with prev(i).
std::vector<int> match_permutation(const CVec& prev, const CVec& next);

// ---------------------------------------------------------------------------

/// Fast-mode matrix of the reduced traveling-wave ODE,
/// (q_u, q_v) (A - s)^{-1} (0; I_r), r x r.
Mat reduced_traveling_wave_matrix(const RelaxationModel& model, const Vec& u, const Vec& v, double s);

inline Vec endstate_u(const ShockData& sh, Side side) { return side == Side::Minus ? sh.u_minus : sh.u_plus; }
inline Vec endstate_v(const ShockData& sh, Side side) { return side == Side::Minus ? sh.v_minus : sh.v_plus; }

}  // namespace relax

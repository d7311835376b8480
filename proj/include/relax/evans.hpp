#pragma once

#include "relax/profile.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace relax {

// ---------------------------------------------------------------------------
// Coefficients

/// W' = A^{-1}(Q - lambda) W at a state (W form).
CMat w_coefficient(const Mat& A, const Mat& Q, cplx lambda);

/// Z' = (Q - lambda) A^{-1} Z with Z = A W, using the profile (linear
/// interpolation of A^{-1} and Q A^{-1} between grid points).
CMat coefficient_matrix(const ShockProfile& profile, cplx lambda, double x);

enum class Regime { Exact, HighFrequency, LowFrequency };

struct ModeExpansion {
  cplx lambda{0.0, 0.0};
  Side side = Side::Minus;
  Regime regime = Regime::Exact;
  CVec mu;          // exact roots sorted by real part
  CMat V;           // columns: (-mu A + Q - lambda) V = 0
  int k_stable = 0; // Re mu < 0
  double residual = 0.0;
  /// Expansion predictions aligned with `mu` (empty for the exact regime).
  CVec predicted;
  /// Index of the slow roots (low-frequency regime), aligned with predictions.
  std::vector<int> slow_index;
};

/// Exact roots of the characteristic equation plus the regime's asymptotic
/// predictions (Lemma-style high/low frequency expansions).
ModeExpansion mode_expansion(const RelaxationModel& model, const ShockData& shock, cplx lambda, Side side,
                             Regime regime = Regime::Exact);

// ---------------------------------------------------------------------------
// Evans function

struct EvansOptions {
  int qr_interval = 50;
  /// Evaluate with Q replaced by Q + shift I (moves the spectrum by +shift).
  double spectral_shift = 0.0;
  int threads = 1;
};

/// Precomputed coefficient tables for one profile.
class EvansContext {
 public:
  explicit EvansContext(const ShockProfile& profile, EvansOptions opts = {});

  const ShockProfile& profile() const { return *profile_; }
  const EvansOptions& options() const { return opts_; }
  int dim() const { return N_; }
  double X() const { return profile_->X; }
  double dx() const { return profile_->dx; }

  /// Limiting Z-form matrix (Q - lambda) A^{-1} at +-infinity.
  CMat limit_matrix(Side side, cplx lambda) const;
  const Mat& A_inv(Side side) const { return side == Side::Minus ? Ai_m_ : Ai_p_; }
  const Mat& A_limit(Side side) const { return side == Side::Minus ? A_m_ : A_p_; }

  /// Coefficients at x_j = -X + j dx / level, stored as consecutive N x N blocks.
  struct Table {
    int level = 1;
    int N = 0;
    std::vector<double> Ai;   // A^{-1}(x_j)
    std::vector<double> QAi;  // (Q + shift) A^{-1}(x_j)
    int size() const { return N == 0 ? 0 : static_cast<int>(Ai.size() / (N * N)); }
    Eigen::Map<const Mat> ai(int j) const { return Eigen::Map<const Mat>(Ai.data() + j * N * N, N, N); }
    Eigen::Map<const Mat> qai(int j) const { return Eigen::Map<const Mat>(QAi.data() + j * N * N, N, N); }
  };
  /// Table for the given level (a power of two), built on first use.
  const Table& table(int level) const;

 private:
  std::shared_ptr<const ShockProfile> profile_;
  EvansOptions opts_;
  int N_ = 0;
  Mat Ai_m_, Ai_p_, QAi_m_, QAi_p_, A_m_, A_p_;
  mutable std::mutex mutex_;
  mutable std::map<int, std::unique_ptr<Table>> tables_;
};

/// Eigen-decomposition of a limiting matrix split into the group decaying
/// toward the given infinity (stable at +, unstable at -).
struct ModeSelection {
  CVec mu;            // all eigenvalues
  CMat V;             // all eigenvectors (columns)
  CMat Linv;          // inverse (rows)
  std::vector<int> group;  // selected indices
  CMat basis() const;
  CMat projector() const;
  cplx sigma() const;  // mean of selected eigenvalues
};

/// Selection by sign of Re mu; on the boundary of the splitting region the
/// sign is taken from lambda + small positive real shift.
ModeSelection select_modes(const EvansContext& ctx, Side side, cplx lambda);

struct EvansValue {
  cplx lambda{0.0, 0.0};
  double log_abs = 0.0;
  double arg = 0.0;
  int k_stable = 0;
  double log_scale_plus = 0.0;   // accumulated log|det R|
  double log_scale_minus = 0.0;
  cplx value() const { return std::exp(cplx(log_abs, arg)); }
};

/// D(lambda) with analytic (pivot-normalised) asymptotic eigenvectors.
EvansValue evans_value(const EvansContext& ctx, cplx lambda);

/// D(lambda) from explicitly supplied initial bases (N x k at +, N x (N-k) at -).
EvansValue evans_with_bases(const EvansContext& ctx, cplx lambda, const CMat& V_plus, const CMat& V_minus,
                            cplx sigma_plus, cplx sigma_minus);

std::vector<EvansValue> evans_batch(const EvansContext& ctx, const std::vector<cplx>& lambdas, int threads = 1);

// ---------------------------------------------------------------------------
// Contours

struct ContourSpec {
  enum class Kind { Outer, Circle } kind = Kind::Outer;
  double R = 30.0;      // outer radius
  double eta1 = 0.05;   // left boundary Re lambda = -eta1
  double r0 = 0.05;     // circle radius
  double centre_re = 0.0;
  double centre_im = 0.0;
};

struct ContourOptions {
  double max_step = 0.0;     // arc-length; <= 0 selects length / 200
  double min_step = 1e-9;
  double rel_change = 0.5;
  double max_arg_step = 1.5707963267948966;
  int sample_budget = 40000;
};

struct ContourSample {
  cplx lambda;
  double log_abs = 0.0;
  double arg_unwound = 0.0;
  int k_stable = 0;
};

struct ContourReport {
  ContourSpec spec;
  std::vector<ContourSample> samples;
  double total_arg = 0.0;
  double holonomy_arg = 0.0;
  double winding_real = 0.0;
  int winding = 0;
  bool closed_ok = false;
  int rejected_steps = 0;
  double max_rel_change = 0.0;
  double min_abs_log = 0.0;
  std::string error;
};

/// Point on the closed contour at arc-length parameter s in [0, length].
cplx contour_point(const ContourSpec& spec, double s);
double contour_length(const ContourSpec& spec);

/// Adaptive argument-principle winding with continuation of the decaying
/// mode groups (Kato transport of their eigenvector bases).
ContourReport evans_on_contour(const EvansContext& ctx, const ContourSpec& spec, const ContourOptions& opts = {});

// ---------------------------------------------------------------------------
// Liu–Majda determinant and verdict

struct DeltaResult {
  double delta = 0.0;
  Mat matrix;
  int outgoing_minus = 0;
  int outgoing_plus = 0;
  Vec mass;        // m_1
  bool degenerate = false;
};

/// Columns: outgoing r*_j at u- (a*_j < s), outgoing at u+ (a*_j > s), then
/// m_1 = integral of d/d delta ubar(x - delta) = u- - u+.
DeltaResult liu_majda_delta(const RelaxationModel& model, const ShockData& shock, const ShockProfile* profile = nullptr);

/// det [R_out_minus, R_out_plus, masses]; n columns total.
double liu_majda_determinant(const Mat& out_minus, const Mat& out_plus, const Mat& masses);

struct VerdictSettings {
  ContourSpec outer;
  double r0 = 0.05;
  ContourOptions contour;
};

enum class Tri { Pass, Fail, Unknown };
const char* to_string(Tri t);

struct StabilityVerdict {
  Tri D1 = Tri::Unknown, D2 = Tri::Unknown, script_D = Tri::Unknown;
  int winding_outer = 0;
  int winding_big = 0;  // outer minus origin disk
  int winding_origin = 0;
  double delta = 0.0;
  int ell = 1;
  ContourReport outer_report, circle_report;
  std::vector<std::string> notes;
};

/// Default contour radius 10 (1 + max eta + max |a|).
double default_contour_radius(const RelaxationModel& model, const ShockData& shock);

StabilityVerdict stability_verdict(const EvansContext& ctx, const VerdictSettings& settings);

// ---------------------------------------------------------------------------
// Resolvent

/// Decaying solutions in Z = A W coordinates stored on the profile grid in orthonormalised
/// form: Phi+(x_j) = Qp_j Tp_j with Tp_j = Rp_j Tp_{j+1}, Phi-(x_j) = Qm_j Tm_j
/// with Tm_j = Rm_j Tm_{j-1}.
struct ResolventBases {
  cplx lambda{0.0, 0.0};
  int N = 0, k = 0, M = 0;
  std::vector<double> x;
  std::vector<CMat> Qp, Qm;
  std::vector<CMat> Rp, Rm;       // transfer factors
  std::vector<CMat> Rp_inv, Rm_inv;
  std::vector<CMat> Phi_inv;      // [Qp Qm]^{-1} at x_j
  std::vector<Mat> Ai;            // A^{-1}(x_j)
  double min_rcond = 0.0;
};

ResolventBases resolvent_bases(const EvansContext& ctx, cplx lambda);

/// G_lambda(x_i, y_j) on grid indices. For i == j, `upper` picks the x > y limit.
CMat resolvent_kernel(const ResolventBases& b, int i, int j, bool upper = true);

/// G_lambda at arbitrary grid-aligned points (nearest index).
CMat resolvent_kernel(const EvansContext& ctx, cplx lambda, double x, double y);

/// (G_lambda f)(x_i) = int G(x_i, y) f(y) dy with trapezoid weights (O(M)).
CMat resolvent_apply(const ResolventBases& b, const CMat& f);

// ---------------------------------------------------------------------------
// Adjoint

struct AdjointBasis {
  cplx lambda{0.0, 0.0};
  std::vector<double> x;
  std::vector<CMat> W;        // forward solutions (columns), W form
  std::vector<CMat> W_tilde;  // adjoint solutions (columns)
  int centre = 0;
  /// max_x |<W~, A W>(x) - <W~, A W>(0)| relative to |<W~, A W>(0)|.
  double pairing_drift = 0.0;
};

/// Adjoint solutions of A^* W~' + Q^* W~ = conj(lambda) W~ normalised at x = 0
/// so that W~^* A [Phi+ Phi-] = I; integrated with the forward basis over [-L, L].
AdjointBasis adjoint_basis(const EvansContext& ctx, cplx lambda, double L);

/// Right-hand side matrix of the adjoint ODE, W~' = -((Q - lambda) A^{-1})^* W~.
CMat adjoint_coefficient(const ShockProfile& profile, cplx lambda, double x);

}  // namespace relax

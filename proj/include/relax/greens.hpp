#pragma once

#include "relax/evans.hpp"

#include <string>
#include <vector>

namespace relax {

// ---------------------------------------------------------------------------
// Characteristic transport

struct CharacteristicPath {
  int family = 0;
  double y = 0.0, t = 0.0;
  double z = 0.0;        // z_j(y, t)
  Mat zeta;              // m_j x m_j, dzeta/dt = -eta_j(z) zeta
  Mat eta_bar;           // time average of eta_j along the path
  double a_bar = 0.0;    // time average of a_j
  double eta_min = 0.0;  // min Re sigma(eta_j) over the path
};

/// RK4 with step min(dx / max|a|, t / 100). Families are indexed by ascending
/// characteristic speed in the shock frame.
CharacteristicPath characteristic_path(const ShockProfile& profile, int family, double y, double t);

/// (H f)(x_i) on the profile grid; f is N x M. Each family pulls f back along
/// its characteristic with unit weight.
Mat H_apply(const ShockProfile& profile, const Mat& f, double t);

// ---------------------------------------------------------------------------
// Scattering

struct ScatteringEntry {
  Side side = Side::Minus;  // side of the incoming signal
  int family = 0;           // incoming equilibrium family k
  double speed = 0.0;       // a*_k - s
  double beta = 0.0;        // beta*_k
  Vec r_star;               // incoming r*_k (n)
  Vec R_star, L_star;       // lifted to R^{n+r}
  /// Coefficients on outgoing families at -, at +, and on the mass column.
  std::vector<double> c_minus, c_plus;
  double c0 = 0.0;
  double residual = 0.0;
};

struct OutgoingMode {
  int family = 0;
  double speed = 0.0;
  double beta = 0.0;
  Vec R_star, L_star;
};

struct ScatteringTable {
  std::vector<ScatteringEntry> entries;
  std::vector<OutgoingMode> out_minus, out_plus;  // a*_j < s at -, a*_j > s at +
  Vec mass;                 // m_1 (n)
  Mat system;               // [r*_out-, r*_out+, m_1]
  double delta = 0.0;       // det(system)
  double liu_majda = 0.0;   // same determinant from liu_majda_delta
  int permutation_sign = 1;
  Vec pi;                   // (n + r), left zero effective eigenfunction
  double pi_consistency = 0.0;  // |pi(-) - pi(+)|
  double max_residual = 0.0;
  Vec ubar_prime_mass;      // int dU/d delta dx over the grid (n + r)
};

/// Throws Degenerate naming (D2) when the system is singular.
ScatteringTable scattering_solve(const ShockProfile& profile);

// ---------------------------------------------------------------------------
// Excited and scattered terms

/// errfn bracket of an incoming family at y: mass of the heat profile that has
/// crossed x = 0 by time t, minus its image.
double errfn_bracket(double y, double t, double speed, double beta);

/// E(x, t; y), N x N.
Mat E_eval(const ShockProfile& profile, const ScatteringTable& table, double x, double t, double y);

/// S(x, t; y), N x N; zero for t < 1.
Mat S_eval(const ShockProfile& profile, const ScatteringTable& table, double x, double t, double y);

/// e(y, t) (1 x N row) with E(x, t; y) = dU/d delta(x) e(y, t).
Vec e_kernel(const ScatteringTable& table, double y, double t);

struct LinearShift {
  double delta = 0.0;
  Mat phi;  // N x M, delta * dU/d delta
};

LinearShift linear_shift(const ShockProfile& profile, const ScatteringTable& table, const Mat& U0, double t);

/// (H + E + S) applied to f on the profile grid.
struct GreenApplication {
  Mat H, E, S;
  Mat total() const { return H + E + S; }
};

GreenApplication green_apply(const ShockProfile& profile, const ScatteringTable& table, const Mat& f, double t);

// ---------------------------------------------------------------------------
// Laplace inversion

struct ContourGreenOptions {
  double c = 1.0;      // Bromwich abscissa (right of the spectrum)
  double Xi = 200.0;   // |Im lambda| truncation
  /// Time aliasing of the trapezoid rule is ~ exp(-2 pi c / domega).
  double domega = 0.5;
  double tail_tolerance = 0.05;  // relative L1
  /// Resolvent-identity regularisation: the integrand carries L^order f / lambda^order
  /// and the Taylor terms are added back exactly (needs f smooth).
  int order = 2;
};

struct ContourGreenResult {
  Mat value;            // N x M
  double tail_estimate = 0.0;  // relative L1 size of the truncated tail
  int evaluations = 0;
  bool tail_ok = false;
};

/// e^{Lt} f by inverse Laplace transform on Re lambda = c, |Im lambda| <= Xi,
/// trapezoid in omega with conjugate symmetry for real f. For order 1 this is
/// f - (1 / 2 pi) int e^{lambda t} (G_lambda f + f / lambda) d omega.
ContourGreenResult contour_green(const EvansContext& ctx, const Mat& f, double t, const ContourGreenOptions& opts = {});

/// L f = -(A f)' + Q f on the profile grid (finite differences).
Mat apply_linear_operator(const ShockProfile& profile, const Mat& f);

/// dU/d delta = -U' on the profile grid (N x M).
Mat shift_mode(const ShockProfile& profile);

/// Trapezoid L1 norm of selected rows (all rows when rows is empty).
double l1_norm(const ShockProfile& profile, const Mat& f, std::vector<int> rows = {});

}  // namespace relax

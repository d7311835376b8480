#pragma once

#include "relax/common.hpp"

#include <functional>
#include <vector>

namespace relax {

// ---------------------------------------------------------------------------
// Sylvester / commutator equation d1 X - X d2 = F

struct SylvesterResult {
  Mat X;
  double residual = 0.0;
  double separation = 0.0;  // min |sigma(d1) - sigma(d2)|
  double bound = 0.0;       // |X| <= bound |F| (Kronecker operator inverse norm)
};

/// Refuses (Singular) when the spectra of d1 and d2 are closer than 1e-10.
SylvesterResult sylvester(const Mat& d1, const Mat& d2, const Mat& F);

// ---------------------------------------------------------------------------
// Goodman frame

using MatrixField = std::function<Mat(double)>;
using ComplexMatrixField = std::function<CMat(double)>;

struct FrameSample {
  std::vector<Mat> R;  // per block, N x m_j
  std::vector<Mat> L;  // per block, m_j x N
};

struct GoodmanFrame {
  std::vector<double> x;
  std::vector<FrameSample> frame;
  std::vector<int> multiplicity;
  /// max_x |L_j R_j'| / max_x |R_j'| with R' from finite differences of the output.
  double max_LRprime = 0.0;
  double max_Rprime = 0.0;
  double relative_LRprime = 0.0;
  double max_LR_identity_error = 0.0;
  /// Same diagnostic for the naive (pointwise eigen-solve) frame.
  double naive_max_LRprime = 0.0;
  /// Full transform T0 = [R_1 ... R_J] at sample k.
  Mat T(std::size_t k) const;
  Mat Tinv(std::size_t k) const;
};

struct GoodmanOptions {
  double fd_step = 1e-3;  // for the naive frame derivative
  double group_tol = 1e-8;
};

/// Eigen-blocks of A0(x) (grouped by real part, ascending) on the uniform grid
/// `x` (must contain x0 = the frame anchor, taken as the grid point closest to
/// 0), renormalised so that L_j R_j' = 0. Throws Degenerate when the transport
/// matrix becomes singular.
GoodmanFrame goodman_frame(const MatrixField& A0, const std::vector<double>& x, const GoodmanOptions& opts = {});

// ---------------------------------------------------------------------------
// First-order block diagonalization of W' = (A0 + eps A1) W / eps form

struct DiagonalizationStage {
  int order = 1;
  double eps = 0.0;
  std::vector<double> x;
  std::vector<Mat> T0, T1;  // T = T0 + eps T1 = T0 (I + eps X)
  std::vector<Mat> D0, D1;  // block diagonal
  std::vector<int> multiplicity;
  /// max over interior samples of the off-diagonal part of
  /// T^{-1}(A0 + eps A1)T - eps T^{-1}T'.
  double offdiag_residual = 0.0;
};

DiagonalizationStage block_diagonalize(const MatrixField& A0, const MatrixField& A1, double eps,
                                       const GoodmanFrame& frame);

// ---------------------------------------------------------------------------
// Gap lemma

struct GapOptions {
  double alpha = 0.0;        // coefficient decay rate, required
  double M = 5.0;            // initial matching point (-M); enlarged as needed
  double h = 0.005;          // grid step
  int max_iterations = 100;
  double tol = 1e-10;
  double tail_eps = 1e-16;   // truncation of the (-inf, -M] integral
};

struct GapSolution {
  cplx lambda{0.0, 0.0};
  cplx mu{0.0, 0.0};
  CVec V_minus;
  double M = 0.0;
  double alpha = 0.0;
  double alpha_bar = 0.0;
  std::vector<double> x;     // from the truncated far field to 0
  std::vector<CVec> V;       // V(x); W = e^{mu x} V
  int index_minus_M = 0;     // sample at x = -M
  std::vector<double> history;  // sup-norm differences of successive iterates
  int iterations = 0;
  double contraction_estimate = 0.0;
  double ode_residual = 0.0;
  CVec W(std::size_t k) const { return std::exp(mu * x[k]) * V[k]; }
};

/// Solution of W' = A(x) W asymptotic to e^{mu x} V- as x -> -inf, built from
/// the contraction map on (-inf, -M] and extended to x <= 0 by RK4.
GapSolution gap_basis(const ComplexMatrixField& A, const CMat& A_minus, cplx mu, const CVec& V_minus,
                      const GapOptions& opts, cplx lambda = {0.0, 0.0});

// ---------------------------------------------------------------------------
// Reduced flow expansion

struct ReducedFlowOptions {
  double h = 1e-3;
  double theta = 0.05;   // claimed decay rate of the approximate flow
  double C = 10.0;       // and its constant
};

struct ReducedFlowResult {
  Mat F;       // approximate flow y -> x of w' = M w
  Mat E;       // first-order correction
  Mat Fbar;    // F + (delta / eta) E
  Mat direct;  // flow of w' = (M + delta Theta) w
  double error = 0.0;  // |Fbar - direct|
};

/// Throws PreconditionViolated if |F^{y->z}| > C e^{-theta eta |z - y|} on the grid.
ReducedFlowResult reduced_flow_first_order(const MatrixField& M, const MatrixField& Theta, double delta, double eta,
                                           double y, double x, const ReducedFlowOptions& opts = {});

/// Flow of w' = B(z) w from y to x (RK4).
Mat matrix_flow(const MatrixField& B, double y, double x, double h);

}  // namespace relax

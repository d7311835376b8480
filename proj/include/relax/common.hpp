#pragma once

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace relax {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

enum class ErrorKind {
  InvalidInput,
  NonFinite,
  NonHyperbolic,
  Singular,
  Defective,
  MultiplicityChange,
  NoConnection,
  Degenerate,
  IndexMismatch,
  OutsideSplitting,
  RootCoalescence,
  NonConvergence,
  Overflow,
  BranchError,
  SampleBudget,
  PreconditionViolated,
  Unsupported,
  Io,
};

const char* to_string(ErrorKind kind);

/// Numerical or input failure carrying a machine-readable kind.
class RelaxError : public std::runtime_error {
 public:
  RelaxError(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

enum class Side { Minus, Plus };

inline const char* to_string(Side side) { return side == Side::Minus ? "minus" : "plus"; }

/// Least-squares line y = slope*x + intercept with coefficient of determination.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t count = 0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

std::vector<double> linspace(double a, double b, std::size_t count);
std::vector<double> logspace(double lo, double hi, std::size_t count);

/// Cumulative Gaussian profile normalized so that errfn(+inf) = 1.
double errfn(double z);

/// Heat kernel (4 pi beta t)^{-1/2} exp(-z^2 / (4 beta t)).
double heat_kernel(double z, double beta, double t);

/// Real eigen-decomposition of a matrix with (numerically) real spectrum.
/// Eigenvalues ascending; columns of `right` are eigenvectors and rows of
/// `left` the dual basis (left * right = I).
struct RealEigen {
  Vec values;
  Mat right;
  Mat left;
};

/// Throws NonHyperbolic when an imaginary part exceeds `imag_tol * (1 + |M|)`
/// and Defective when the eigenvector matrix is numerically singular.
RealEigen real_eigen(const Mat& m, double imag_tol = 1e-10);

/// Complex eigen-decomposition; rows of `left` are the dual basis.
struct ComplexEigen {
  CVec values;
  CMat right;
  CMat left;
};

ComplexEigen complex_eigen(const CMat& m);

bool all_finite(const Mat& m);

}  // namespace relax

#include "relax/common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace relax {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid_input";
    case ErrorKind::NonFinite: return "non_finite";
    case ErrorKind::NonHyperbolic: return "non_hyperbolic";
    case ErrorKind::Singular: return "singular";
    case ErrorKind::Defective: return "defective";
    case ErrorKind::MultiplicityChange: return "multiplicity_change";
    case ErrorKind::NoConnection: return "no_connection";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::IndexMismatch: return "index_mismatch";
    case ErrorKind::OutsideSplitting: return "outside_splitting";
    case ErrorKind::RootCoalescence: return "root_coalescence";
    case ErrorKind::NonConvergence: return "non_convergence";
    case ErrorKind::Overflow: return "overflow";
    case ErrorKind::BranchError: return "branch_error";
    case ErrorKind::SampleBudget: return "sample_budget";
    case ErrorKind::PreconditionViolated: return "precondition_violated";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw RelaxError(ErrorKind::InvalidInput, "fit_line: need at least two paired samples");
  }
  const double m = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit fit;
  fit.count = x.size();
  fit.slope = sxx > 0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = (sxx > 0 && syy > 0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

std::vector<double> linspace(double a, double b, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = a;
    return out;
  }
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return out;
}

std::vector<double> logspace(double lo, double hi, std::size_t count) {
  auto exps = linspace(std::log10(lo), std::log10(hi), count);
  for (auto& e : exps) e = std::pow(10.0, e);
  return exps;
}

double errfn(double z) {
  if (std::isinf(z)) return z > 0 ? 1.0 : 0.0;
  // erfc keeps full relative accuracy in the lower tail.
  return 0.5 * std::erfc(-z);
}

double heat_kernel(double z, double beta, double t) {
  const double var4 = 4.0 * beta * t;
  return std::exp(-z * z / var4) / std::sqrt(M_PI * var4);
}

bool all_finite(const Mat& m) { return m.allFinite(); }

RealEigen real_eigen(const Mat& m, double imag_tol) {
  if (!m.allFinite()) throw RelaxError(ErrorKind::NonFinite, "real_eigen: non-finite matrix entries");
  const auto dim = m.rows();
  Eigen::EigenSolver<Mat> es(m, true);
  if (es.info() != Eigen::Success) throw RelaxError(ErrorKind::NonConvergence, "real_eigen: eigensolver failed");
  const double scale = 1.0 + m.norm();
  std::vector<Eigen::Index> order(dim);
  std::iota(order.begin(), order.end(), 0);
  const auto& ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (std::abs(ev(i).imag()) > imag_tol * scale) {
      throw RelaxError(ErrorKind::NonHyperbolic, "real_eigen: complex eigenvalue " +
                                                     std::to_string(ev(i).real()) + "+" +
                                                     std::to_string(ev(i).imag()) + "i");
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return ev(a).real() < ev(b).real(); });
  RealEigen out;
  out.values.resize(dim);
  out.right.resize(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    out.values(j) = ev(order[j]).real();
    Vec col = es.eigenvectors().col(order[j]).real();
    const double nrm = col.norm();
    if (nrm == 0.0) throw RelaxError(ErrorKind::Defective, "real_eigen: zero eigenvector");
    out.right.col(j) = col / nrm;
  }
  Eigen::FullPivLU<Mat> lu(out.right);
  if (!lu.isInvertible() || lu.rcond() < 1e-12) {
    throw RelaxError(ErrorKind::Defective, "real_eigen: eigenvector matrix is singular (defective matrix)");
  }
  out.left = lu.inverse();
  return out;
}

ComplexEigen complex_eigen(const CMat& m) {
  Eigen::ComplexEigenSolver<CMat> es(m, true);
  if (es.info() != Eigen::Success) throw RelaxError(ErrorKind::NonConvergence, "complex_eigen: eigensolver failed");
  ComplexEigen out;
  out.values = es.eigenvalues();
  out.right = es.eigenvectors();
  for (Eigen::Index j = 0; j < out.right.cols(); ++j) out.right.col(j).normalize();
  Eigen::FullPivLU<CMat> lu(out.right);
  if (!lu.isInvertible()) throw RelaxError(ErrorKind::Defective, "complex_eigen: defective matrix");
  out.left = lu.inverse();
  return out;
}

}  // namespace relax

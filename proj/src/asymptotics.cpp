#include "relax/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace relax {

SylvesterResult sylvester(const Mat& d1, const Mat& d2, const Mat& F) {
  const auto m1 = d1.rows(), m2 = d2.rows();
  if (d1.cols() != m1 || d2.cols() != m2 || F.rows() != m1 || F.cols() != m2) {
    throw RelaxError(ErrorKind::InvalidInput, "sylvester: dimension mismatch");
  }
  Eigen::EigenSolver<Mat> e1(d1, false), e2(d2, false);
  double sep = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < m1; ++i)
    for (Eigen::Index j = 0; j < m2; ++j) sep = std::min(sep, std::abs(e1.eigenvalues()(i) - e2.eigenvalues()(j)));
  if (sep < 1e-10) {
    throw RelaxError(ErrorKind::Singular, "sylvester: spectra of d1 and d2 are not separated (gap " +
                                              std::to_string(sep) + ")");
  }
  // vec(d1 X - X d2) = (I (x) d1 - d2^T (x) I) vec X
  const Eigen::Index K = m1 * m2;
  Mat op = Mat::Zero(K, K);
  for (Eigen::Index j = 0; j < m2; ++j) {
    op.block(j * m1, j * m1, m1, m1) += d1;
    for (Eigen::Index l = 0; l < m2; ++l) op.block(l * m1, j * m1, m1, m1).diagonal().array() -= d2(j, l);
  }
  Eigen::FullPivLU<Mat> lu(op);
  Vec rhs = Eigen::Map<const Vec>(F.data(), K);
  Vec sol = lu.solve(rhs);
  // one step of iterative refinement
  sol += lu.solve(rhs - op * sol);
  SylvesterResult res;
  res.X = Eigen::Map<Mat>(sol.data(), m1, m2);
  res.residual = (d1 * res.X - res.X * d2 - F).norm();
  res.separation = sep;
  Eigen::JacobiSVD<Mat> svd(op);
  res.bound = 1.0 / svd.singularValues().minCoeff();
  return res;
}

// ---------------------------------------------------------------------------

Mat GoodmanFrame::T(std::size_t k) const {
  const auto& f = frame[k];
  const auto N = f.R.front().rows();
  Mat out(N, N);
  Eigen::Index c = 0;
  for (const auto& R : f.R) {
    out.middleCols(c, R.cols()) = R;
    c += R.cols();
  }
  return out;
}

Mat GoodmanFrame::Tinv(std::size_t k) const {
  const auto& f = frame[k];
  const auto N = f.L.front().cols();
  Mat out(N, N);
  Eigen::Index c = 0;
  for (const auto& L : f.L) {
    out.middleRows(c, L.rows()) = L;
    c += L.rows();
  }
  return out;
}

namespace {

struct PointFrame {
  std::vector<Mat> R, L;
};

std::vector<int> block_pattern(const Vec& vals, double tol) {
  std::vector<int> p;
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (i > 0 && std::abs(vals(i) - vals(i - 1)) <= tol) ++p.back(); else p.push_back(1);
  }
  return p;
}

// Pointwise frame anchored to the reference columns through spectral projectors.
PointFrame naive_frame(const Mat& A, const std::vector<Mat>& ref, const std::vector<int>& pattern, double tol) {
  const auto eig = real_eigen(A);
  if (block_pattern(eig.values, tol * (1.0 + A.norm())) != pattern) {
    throw RelaxError(ErrorKind::MultiplicityChange, "goodman_frame: block structure changes along x");
  }
  PointFrame pf;
  Eigen::Index c = 0;
  for (std::size_t j = 0; j < pattern.size(); ++j) {
    const int m = pattern[j];
    const Mat E = eig.right.middleCols(c, m);
    const Mat F = eig.left.middleRows(c, m);
    if (ref.empty()) {
      pf.R.push_back(E);
      pf.L.push_back(F);
    } else {
      const Mat Fr = F * ref[j];
      Eigen::FullPivLU<Mat> lu(Fr);
      if (!lu.isInvertible()) throw RelaxError(ErrorKind::Degenerate, "goodman_frame: projected frame degenerates");
      pf.R.push_back(E * Fr);
      pf.L.push_back(lu.solve(F));
    }
    c += m;
  }
  return pf;
}

template <class Get>
Mat fd4(const Get& get, int k, int M, double h) {
  if (k >= 2 && k <= M - 3) return (-get(k + 2) + 8.0 * get(k + 1) - 8.0 * get(k - 1) + get(k - 2)) / (12.0 * h);
  if (k >= 1 && k <= M - 2) return (get(k + 1) - get(k - 1)) / (2.0 * h);
  if (k == 0) return (-3.0 * get(0) + 4.0 * get(1) - get(2)) / (2.0 * h);
  return (3.0 * get(M - 1) - 4.0 * get(M - 2) + get(M - 3)) / (2.0 * h);
}

}  // namespace

GoodmanFrame goodman_frame(const MatrixField& A0, const std::vector<double>& x, const GoodmanOptions& opts) {
  const int M = static_cast<int>(x.size());
  if (M < 5) throw RelaxError(ErrorKind::InvalidInput, "goodman_frame: need at least 5 grid points");
  const double h = x[1] - x[0];
  int k0 = 0;
  for (int k = 1; k < M; ++k)
    if (std::abs(x[k]) < std::abs(x[k0])) k0 = k;

  const Mat Aref = A0(x[k0]);
  const auto eig0 = real_eigen(Aref);
  const auto pattern = block_pattern(eig0.values, opts.group_tol * (1.0 + Aref.norm()));
  const auto anchor = naive_frame(Aref, {}, pattern, opts.group_tol);
  const auto& ref = anchor.R;
  const std::size_t J = pattern.size();

  auto naive_at = [&](double xx) { return naive_frame(A0(xx), ref, pattern, opts.group_tol); };
  // generator -L~ R~' per block
  auto generator = [&](double xx) {
    const double e = opts.fd_step;
    const auto p2 = naive_at(xx + 2 * e), p1 = naive_at(xx + e), m1 = naive_at(xx - e), m2 = naive_at(xx - 2 * e);
    const auto c = naive_at(xx);
    std::vector<Mat> G(J);
    for (std::size_t j = 0; j < J; ++j) {
      const Mat Rp = (-p2.R[j] + 8.0 * p1.R[j] - 8.0 * m1.R[j] + m2.R[j]) / (12.0 * e);
      G[j] = -c.L[j] * Rp;
    }
    return G;
  };

  GoodmanFrame out;
  out.x = x;
  out.multiplicity = pattern;
  out.frame.resize(M);
  std::vector<std::vector<Mat>> alpha(M, std::vector<Mat>(J));
  for (std::size_t j = 0; j < J; ++j) alpha[k0][j] = Mat::Identity(pattern[j], pattern[j]);
  for (int dir : {1, -1}) {
    std::vector<Mat> a = alpha[k0];
    for (int k = k0 + dir; k >= 0 && k < M; k += dir) {
      const double xa = x[k - dir], hh = dir * h;
      const auto G1 = generator(xa), G2 = generator(xa + 0.5 * hh), G3 = generator(xa + hh);
      for (std::size_t j = 0; j < J; ++j) {
        const Mat k1 = G1[j] * a[j];
        const Mat k2 = G2[j] * (a[j] + 0.5 * hh * k1);
        const Mat k3 = G2[j] * (a[j] + 0.5 * hh * k2);
        const Mat k4 = G3[j] * (a[j] + hh * k3);
        a[j] += (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (std::abs(a[j].determinant()) < 1e-12) {
          throw RelaxError(ErrorKind::Degenerate, "goodman_frame: transport matrix became singular");
        }
      }
      alpha[k] = a;
    }
  }
  std::vector<PointFrame> naive(M);
  for (int k = 0; k < M; ++k) {
    naive[k] = naive_at(x[k]);
    auto& f = out.frame[k];
    for (std::size_t j = 0; j < J; ++j) {
      f.R.push_back(naive[k].R[j] * alpha[k][j]);
      f.L.push_back(alpha[k][j].partialPivLu().solve(naive[k].L[j]));
    }
  }
  // diagnostics from finite differences of the returned samples
  for (int k = 0; k < M; ++k) {
    for (std::size_t j = 0; j < J; ++j) {
      const Mat Rp = fd4([&](int i) { return out.frame[i].R[j]; }, k, M, h);
      const Mat Rn = fd4([&](int i) { return naive[i].R[j]; }, k, M, h);
      const bool interior = k >= 2 && k <= M - 3;
      out.max_Rprime = std::max(out.max_Rprime, Rp.norm());
      if (interior) {
        out.max_LRprime = std::max(out.max_LRprime, (out.frame[k].L[j] * Rp).norm());
        out.naive_max_LRprime = std::max(out.naive_max_LRprime, (naive[k].L[j] * Rn).norm());
      }
      const Mat I = Mat::Identity(pattern[j], pattern[j]);
      out.max_LR_identity_error = std::max(out.max_LR_identity_error, (out.frame[k].L[j] * out.frame[k].R[j] - I).norm());
    }
  }
  out.relative_LRprime = out.max_Rprime > 0 ? out.max_LRprime / out.max_Rprime : out.max_LRprime;
  return out;
}

// ---------------------------------------------------------------------------

DiagonalizationStage block_diagonalize(const MatrixField& A0, const MatrixField& A1, double eps,
                                       const GoodmanFrame& frame) {
  const int M = static_cast<int>(frame.x.size());
  const double h = frame.x[1] - frame.x[0];
  const auto& pat = frame.multiplicity;
  const std::size_t J = pat.size();
  std::vector<Eigen::Index> off(J + 1, 0);
  for (std::size_t j = 0; j < J; ++j) off[j + 1] = off[j] + pat[j];

  DiagonalizationStage st;
  st.eps = eps;
  st.x = frame.x;
  st.multiplicity = pat;
  std::vector<Mat> T0(M), T0i(M);
  for (int k = 0; k < M; ++k) {
    T0[k] = frame.T(k);
    T0i[k] = frame.Tinv(k);
  }
  st.T0 = T0;
  st.T1.resize(M);
  st.D0.resize(M);
  st.D1.resize(M);
  std::vector<Mat> T(M);
  for (int k = 0; k < M; ++k) {
    const Mat T0p = fd4([&](int i) { return T0[i]; }, k, M, h);
    const Mat D0full = T0i[k] * A0(frame.x[k]) * T0[k];
    const Mat G = T0i[k] * A1(frame.x[k]) * T0[k] - T0i[k] * T0p;
    Mat D0 = Mat::Zero(D0full.rows(), D0full.cols()), D1 = D0, X = D0;
    for (std::size_t a = 0; a < J; ++a) {
      D0.block(off[a], off[a], pat[a], pat[a]) = D0full.block(off[a], off[a], pat[a], pat[a]);
      D1.block(off[a], off[a], pat[a], pat[a]) = G.block(off[a], off[a], pat[a], pat[a]);
    }
    for (std::size_t a = 0; a < J; ++a) {
      for (std::size_t b = 0; b < J; ++b) {
        if (a == b) continue;
        const auto sol = sylvester(D0.block(off[a], off[a], pat[a], pat[a]), D0.block(off[b], off[b], pat[b], pat[b]),
                                   -G.block(off[a], off[b], pat[a], pat[b]));
        X.block(off[a], off[b], pat[a], pat[b]) = sol.X;
      }
    }
    st.D0[k] = D0;
    st.D1[k] = D1;
    st.T1[k] = T0[k] * X;
    T[k] = T0[k] + eps * st.T1[k];
  }
  for (int k = 4; k < M - 4; ++k) {
    const Mat Tp = fd4([&](int i) { return T[i]; }, k, M, h);
    Eigen::PartialPivLU<Mat> lu(T[k]);
    const Mat R = lu.solve((A0(frame.x[k]) + eps * A1(frame.x[k])) * T[k]) - eps * lu.solve(Tp);
    Mat offd = R;
    for (std::size_t a = 0; a < J; ++a) offd.block(off[a], off[a], pat[a], pat[a]).setZero();
    st.offdiag_residual = std::max(st.offdiag_residual, offd.norm());
  }
  return st;
}

// ---------------------------------------------------------------------------

GapSolution gap_basis(const ComplexMatrixField& A, const CMat& A_minus, cplx mu, const CVec& V_minus,
                      const GapOptions& opts, cplx lambda) {
  if (!(opts.alpha > 0.0)) throw RelaxError(ErrorKind::InvalidInput, "gap_basis: alpha must be positive");
  const auto N = A_minus.rows();
  if ((A_minus * V_minus - mu * V_minus).norm() > 1e-8 * (1.0 + A_minus.norm()) * V_minus.norm()) {
    throw RelaxError(ErrorKind::InvalidInput, "gap_basis: (mu, V-) is not an eigenpair of the limit");
  }
  const double alpha = opts.alpha;
  const double abar1 = 0.45 * alpha, abar2 = 0.9 * alpha, alpha2 = 0.75 * alpha;
  const CMat B = A_minus - mu * CMat::Identity(N, N);
  ComplexEigen ed;
  try {
    ed = complex_eigen(B);
  } catch (const RelaxError& e) {
    throw RelaxError(ErrorKind::Defective, std::string("gap_basis: limiting matrix: ") + e.what());
  }
  const CMat& S = ed.right;
  const CMat& Si = ed.left;
  const CVec& beta = ed.values;
  Eigen::VectorXd maskP(N);
  for (Eigen::Index i = 0; i < N; ++i) maskP(i) = beta(i).real() < alpha2 ? 1.0 : 0.0;
  const double kappa = S.norm() * Si.norm();

  // coefficient constant of |A - A-| <= C e^{alpha x}
  double Ctheta = 0.0;
  for (double xs = -4.0 * opts.M - 40.0 / alpha; xs <= 0.0; xs += 0.25) {
    Ctheta = std::max(Ctheta, (A(xs) - A_minus).norm() * std::exp(-alpha * xs));
  }
  Ctheta = std::max(Ctheta, 1e-300);
  double M = opts.M;
  auto contraction = [&](double m) {
    return kappa * Ctheta * (1.0 / (alpha - abar2) + 1.0 / (alpha - abar1)) * std::exp(-abar1 * m);
  };
  while (contraction(M) >= 0.5) M += 1.0;

  const double tail = std::log(opts.tail_eps / Ctheta) / alpha;  // |Theta| < tail_eps beyond
  const double x_left = std::min(-M - 10.0, tail);
  const int Kq = static_cast<int>(std::ceil((-M - x_left) / opts.h));
  const double hq = (-M - x_left) / Kq;
  const int Ke = static_cast<int>(std::ceil(M / opts.h));
  const double he = M / Ke;

  GapSolution sol;
  sol.lambda = lambda;
  sol.mu = mu;
  sol.V_minus = V_minus;
  sol.M = M;
  sol.alpha = alpha;
  sol.alpha_bar = abar1;
  sol.contraction_estimate = contraction(M);
  sol.index_minus_M = Kq;
  sol.x.resize(Kq + Ke + 1);
  for (int k = 0; k <= Kq; ++k) sol.x[k] = x_left + k * hq;
  sol.x[Kq] = -M;
  for (int k = 1; k <= Ke; ++k) sol.x[Kq + k] = -M + k * he;
  sol.x.back() = 0.0;

  std::vector<CMat> Theta(Kq + 1);
  for (int k = 0; k <= Kq; ++k) Theta[k] = A(sol.x[k]) - A_minus;
  CVec eph(N), emh(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    eph(i) = std::exp(beta(i) * hq);
    emh(i) = std::exp(-beta(i) * hq);
  }
  std::vector<CVec> V(Kq + 1, V_minus), Vn(Kq + 1), c(Kq + 1);
  bool converged = false;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    for (int k = 0; k <= Kq; ++k) c[k] = Si * (Theta[k] * V[k]);
    std::vector<CVec> IP(Kq + 1), IQ(Kq + 1);
    IP[0] = CVec::Zero(N);
    for (int k = 0; k < Kq; ++k) {
      IP[k + 1] = eph.cwiseProduct(IP[k]) +
                  0.5 * hq * (eph.cwiseProduct(maskP.cast<cplx>().cwiseProduct(c[k])) +
                              maskP.cast<cplx>().cwiseProduct(c[k + 1]));
    }
    const CVec maskQ = (Eigen::VectorXd::Ones(N) - maskP).cast<cplx>();
    IQ[Kq] = CVec::Zero(N);
    for (int k = Kq - 1; k >= 0; --k) {
      IQ[k] = emh.cwiseProduct(IQ[k + 1]) +
              0.5 * hq * (maskQ.cwiseProduct(c[k]) + emh.cwiseProduct(maskQ.cwiseProduct(c[k + 1])));
    }
    double diff = 0.0;
    for (int k = 0; k <= Kq; ++k) {
      Vn[k] = V_minus + S * (IP[k] - IQ[k]);
      diff = std::max(diff, (Vn[k] - V[k]).cwiseAbs().maxCoeff());
    }
    V.swap(Vn);
    sol.history.push_back(diff);
    sol.iterations = it;
    if (diff <= opts.tol * (1.0 + V_minus.cwiseAbs().maxCoeff())) {
      converged = true;
      break;
    }
  }
  if (!converged) throw RelaxError(ErrorKind::NonConvergence, "gap_basis: contraction did not converge");

  sol.V = V;
  sol.V.resize(Kq + Ke + 1);
  auto rhs = [&](double xx, const CVec& w) { CVec r = (A(xx) - mu * CMat::Identity(N, N)) * w; return r; };
  CVec w = V[Kq];
  for (int k = 1; k <= Ke; ++k) {
    const double xa = sol.x[Kq + k - 1];
    const CVec k1 = rhs(xa, w);
    const CVec k2 = rhs(xa + 0.5 * he, w + 0.5 * he * k1);
    const CVec k3 = rhs(xa + 0.5 * he, w + 0.5 * he * k2);
    const CVec k4 = rhs(xa + he, w + he * k3);
    w += (he / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    sol.V[Kq + k] = w;
  }
  // residual of V' = (A - mu) V on the extended part (uniform grid)
  double vmax = 0.0;
  for (const auto& v : sol.V) vmax = std::max(vmax, v.norm());
  for (int k = Kq + 2; k <= Kq + Ke - 2; ++k) {
    const CVec d = (-sol.V[k + 2] + 8.0 * sol.V[k + 1] - 8.0 * sol.V[k - 1] + sol.V[k - 2]) / (12.0 * he);
    sol.ode_residual = std::max(sol.ode_residual, (d - rhs(sol.x[k], sol.V[k])).norm() / vmax);
  }
  return sol;
}

// ---------------------------------------------------------------------------

Mat matrix_flow(const MatrixField& B, double y, double x, double h) {
  const int n = std::max(1, static_cast<int>(std::ceil(std::abs(x - y) / h)));
  const double hh = (x - y) / n;
  Mat P = Mat::Identity(B(y).rows(), B(y).cols());
  for (int k = 0; k < n; ++k) {
    const double z = y + k * hh;
    const Mat b1 = B(z), b2 = B(z + 0.5 * hh), b3 = B(z + hh);
    const Mat k1 = b1 * P;
    const Mat k2 = b2 * (P + 0.5 * hh * k1);
    const Mat k3 = b2 * (P + 0.5 * hh * k2);
    const Mat k4 = b3 * (P + hh * k3);
    P += (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return P;
}

ReducedFlowResult reduced_flow_first_order(const MatrixField& Mf, const MatrixField& Theta, double delta, double eta,
                                           double y, double x, const ReducedFlowOptions& opts) {
  if (!(eta > 0.0)) throw RelaxError(ErrorKind::InvalidInput, "reduced_flow_first_order: eta must be positive");
  const int n = std::max(2, static_cast<int>(std::ceil(std::abs(x - y) / opts.h)));
  const double hh = (x - y) / n;
  const auto dim = Mf(y).rows();
  std::vector<Mat> Phi(n + 1);
  Phi[0] = Mat::Identity(dim, dim);
  for (int k = 0; k < n; ++k) {
    const double z = y + k * hh;
    const Mat b1 = Mf(z), b2 = Mf(z + 0.5 * hh), b3 = Mf(z + hh);
    const Mat& P = Phi[k];
    const Mat k1 = b1 * P;
    const Mat k2 = b2 * (P + 0.5 * hh * k1);
    const Mat k3 = b2 * (P + 0.5 * hh * k2);
    const Mat k4 = b3 * (P + hh * k3);
    Phi[k + 1] = P + (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double dz = std::abs(z + hh - y);
    if (Phi[k + 1].norm() > opts.C * std::exp(-opts.theta * eta * dz)) {
      throw RelaxError(ErrorKind::PreconditionViolated, "reduced_flow_first_order: approximate flow does not decay");
    }
  }
  // E = eta Phi(x) int_y^x Phi(z)^{-1} Theta(z) Phi(z) dz
  Mat integral = Mat::Zero(dim, dim);
  for (int k = 0; k <= n; ++k) {
    const double z = y + k * hh;
    const double w = (k == 0 || k == n) ? 0.5 : 1.0;
    integral += w * hh * Phi[k].partialPivLu().solve(Theta(z) * Phi[k]);
  }
  ReducedFlowResult r;
  r.F = Phi[n];
  r.E = eta * Phi[n] * integral;
  r.Fbar = r.F + (delta / eta) * r.E;
  r.direct = matrix_flow([&](double z) { return Mat(Mf(z) + delta * Theta(z)); }, y, x, opts.h);
  r.error = (r.Fbar - r.direct).norm();
  return r;
}

}  // namespace relax

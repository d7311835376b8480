#include "relax/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace relax {

double poly_eval(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

double poly_deriv(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (std::size_t k = c.size(); k-- > 1;) acc = acc * x + static_cast<double>(k) * c[k];
  return acc;
}

RelaxationModel make_jin_xin(int n, double a, std::vector<double> h_poly) {
  if (n < 1) throw RelaxError(ErrorKind::InvalidInput, "jin-xin: n must be >= 1");
  if (!(a > 0.0) || !std::isfinite(a)) throw RelaxError(ErrorKind::InvalidInput, "jin-xin: a must be positive");
  if (h_poly.empty()) throw RelaxError(ErrorKind::InvalidInput, "jin-xin: h_poly must not be empty");
  RelaxationModel m;
  m.kind = ModelKind::JinXin;
  m.n = n;
  m.r = n;
  m.a = a;
  m.h_poly = h_poly;
  m.constant_principal_part = true;
  const double a2 = a * a;
  auto h = [h_poly](const Vec& u) {
    Vec out(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) out(i) = poly_eval(h_poly, u(i));
    return out;
  };
  auto dh = [h_poly](const Vec& u) {
    Vec out(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) out(i) = poly_deriv(h_poly, u(i));
    return out;
  };
  m.f = [](const Vec&, const Vec& v) { return v; };
  m.g = [a2](const Vec& u, const Vec&) { return Vec(a2 * u); };
  m.q = [h](const Vec& u, const Vec& v) { return Vec(h(u) - v); };
  m.f_u = [n](const Vec&, const Vec&) { return Mat(Mat::Zero(n, n)); };
  m.f_v = [n](const Vec&, const Vec&) { return Mat(Mat::Identity(n, n)); };
  m.g_u = [n, a2](const Vec&, const Vec&) { return Mat(a2 * Mat::Identity(n, n)); };
  m.g_v = [n](const Vec&, const Vec&) { return Mat(Mat::Zero(n, n)); };
  m.q_u = [dh](const Vec& u, const Vec&) { return Mat(dh(u).asDiagonal()); };
  m.q_v = [n](const Vec&, const Vec&) { return Mat(-Mat::Identity(n, n)); };
  m.v_star = h;
  return m;
}

namespace {

void require_dims(const RelaxationModel& m, const Vec& u, const Vec& v) {
  if (u.size() != m.n || v.size() != m.r) {
    std::ostringstream os;
    os << "state dimension mismatch: expected (" << m.n << "," << m.r << "), got (" << u.size() << ","
       << v.size() << ")";
    throw RelaxError(ErrorKind::InvalidInput, os.str());
  }
}

// Central differences of F with respect to u (wrt_u) or v.
Mat fd_jacobian(const Field& F, const Vec& u, const Vec& v, bool wrt_u) {
  const Vec& w = wrt_u ? u : v;
  const Vec f0 = F(u, v);
  Mat J(f0.size(), w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    const double h = 1e-6 * (1.0 + std::abs(w(k)));
    Vec up = u, vp = v, um = u, vm = v;
    if (wrt_u) {
      up(k) += h;
      um(k) -= h;
    } else {
      vp(k) += h;
      vm(k) -= h;
    }
    J.col(k) = (F(up, vp) - F(um, vm)) / (2.0 * h);
  }
  return J;
}

Mat eval_or_fd(const FieldJacobian& J, const Field& F, const Vec& u, const Vec& v, bool wrt_u) {
  if (J) return J(u, v);
  return fd_jacobian(F, u, v, wrt_u);
}

std::vector<int> multiplicity_pattern(const Vec& sorted, double tol) {
  std::vector<int> pattern;
  for (Eigen::Index i = 0; i < sorted.size(); ++i) {
    if (i > 0 && std::abs(sorted(i) - sorted(i - 1)) <= tol) {
      ++pattern.back();
    } else {
      pattern.push_back(1);
    }
  }
  return pattern;
}

}  // namespace

StateJacobians state_jacobians(const RelaxationModel& model, const Vec& u, const Vec& v) {
  require_dims(model, u, v);
  StateJacobians J;
  J.f_u = eval_or_fd(model.f_u, model.f, u, v, true);
  J.f_v = eval_or_fd(model.f_v, model.f, u, v, false);
  J.g_u = eval_or_fd(model.g_u, model.g, u, v, true);
  J.g_v = eval_or_fd(model.g_v, model.g, u, v, false);
  J.q_u = eval_or_fd(model.q_u, model.q, u, v, true);
  J.q_v = eval_or_fd(model.q_v, model.q, u, v, false);
  return J;
}

LinearizedCoefficients jacobians(const RelaxationModel& model, const Vec& u, const Vec& v) {
  const auto J = state_jacobians(model, u, v);
  const int n = model.n, r = model.r, N = n + r;
  LinearizedCoefficients c;
  c.A.resize(N, N);
  c.A << J.f_u, J.f_v, J.g_u, J.g_v;
  c.Q = Mat::Zero(N, N);
  c.Q.bottomRows(r) << J.q_u, J.q_v;
  if (!c.A.allFinite() || !c.Q.allFinite()) {
    throw RelaxError(ErrorKind::NonFinite, "jacobians: non-finite entries");
  }
  (void)real_eigen(c.A);  // throws NonHyperbolic / Defective
  return c;
}

LinearizedCoefficients frame_jacobians(const RelaxationModel& model, const Vec& u, const Vec& v, double s) {
  auto c = jacobians(model, u, v);
  c.A.diagonal().array() -= s;
  return c;
}

EquilibriumData equilibrium_data(const RelaxationModel& model, const Vec& u) {
  const Vec v = model.v_star(u);
  const auto J = state_jacobians(model, u, v);
  Eigen::FullPivLU<Mat> qv(J.q_v);
  if (!qv.isInvertible() || qv.rcond() < 1e-12) {
    throw RelaxError(ErrorKind::Singular, "equilibrium_data: q_v is singular");
  }
  EquilibriumData e;
  e.f_star = model.f(u, v);
  e.df_star = J.f_u - J.f_v * qv.solve(J.q_u);
  auto eig = real_eigen(e.df_star);
  e.speeds = eig.values;
  e.right = eig.right;
  e.left = eig.left;
  return e;
}

ChapmanEnskog chapman_enskog(const RelaxationModel& model, const Vec& u) {
  const Vec v = model.v_star(u);
  const auto J = state_jacobians(model, u, v);
  Eigen::FullPivLU<Mat> qv(J.q_v);
  if (!qv.isInvertible() || qv.rcond() < 1e-12) {
    throw RelaxError(ErrorKind::Singular, "chapman_enskog: q_v is singular");
  }
  const Mat vstar_u = -qv.solve(J.q_u);
  const Mat fstar_u = J.f_u + J.f_v * vstar_u;
  const Mat gstar_u = J.g_u + J.g_v * vstar_u;
  ChapmanEnskog ce;
  ce.B = -J.f_v * qv.solve(gstar_u - vstar_u * fstar_u);

  auto eig = real_eigen(fstar_u);
  const double tol = 1e-8 * (1.0 + fstar_u.norm());
  const auto pattern = multiplicity_pattern(eig.values, tol);
  ce.beta_diag.resize(model.n);
  int col = 0;
  for (int m : pattern) {
    Mat blk = eig.left.middleRows(col, m) * ce.B * eig.right.middleCols(col, m);
    if (m > 1) {
      Eigen::EigenSolver<Mat> es(blk, true);
      Eigen::FullPivLU<CMat> lu(es.eigenvectors());
      if (!lu.isInvertible() || lu.rcond() < 1e-10) {
        throw RelaxError(ErrorKind::Defective, "chapman_enskog: beta block is not diagonalizable");
      }
    }
    for (int k = 0; k < m; ++k) ce.beta_diag(col + k) = blk(k, k);
    ce.beta.push_back(blk);
    ce.speed.push_back(eig.values(col));
    ce.multiplicity.push_back(m);
    col += m;
  }
  return ce;
}

CharacteristicModes hyperbolic_modes(const Mat& A, const Mat& Q) {
  auto eig = real_eigen(A);
  const double tol = 1e-8 * (1.0 + A.norm());
  const auto pattern = multiplicity_pattern(eig.values, tol);
  CharacteristicModes cm;
  int col = 0;
  for (int m : pattern) {
    Mat R = eig.right.middleCols(col, m);
    Mat L = eig.left.middleRows(col, m);
    cm.speed.push_back(eig.values.segment(col, m).mean());
    cm.multiplicity.push_back(m);
    cm.eta.push_back(-L * Q * R);
    cm.right.push_back(std::move(R));
    cm.left.push_back(std::move(L));
    col += m;
  }
  return cm;
}

CharacteristicModes hyperbolic_modes(const RelaxationModel& model, const Vec& u, const Vec& v, double s) {
  const auto c = frame_jacobians(model, u, v, s);
  return hyperbolic_modes(c.A, c.Q);
}

ModeData mode_data(const RelaxationModel& model, const Vec& u, double s) {
  const Vec v = model.v_star(u);
  ModeData md;
  md.characteristic = hyperbolic_modes(model, u, v, s);
  md.equilibrium = equilibrium_data(model, u);
  md.chapman_enskog = chapman_enskog(model, u);
  const auto J = state_jacobians(model, u, v);
  const Mat lift = -J.q_v.fullPivLu().solve(J.q_u);
  md.R_star.resize(model.dim(), model.n);
  md.R_star << md.equilibrium.right, lift * md.equilibrium.right;
  md.L_star = Mat::Zero(model.n, model.dim());
  md.L_star.leftCols(model.n) = md.equilibrium.left;
  return md;
}

double rankine_hugoniot_speed(const RelaxationModel& model, const Vec& u_minus, const Vec& u_plus) {
  const Vec du = u_plus - u_minus;
  const double nrm2 = du.squaredNorm();
  if (nrm2 == 0.0) throw RelaxError(ErrorKind::Degenerate, "rankine_hugoniot_speed: zero jump");
  const Vec df = model.f(u_plus, model.v_star(u_plus)) - model.f(u_minus, model.v_star(u_minus));
  return df.dot(du) / nrm2;
}

ShockData make_shock(const RelaxationModel& model, const Vec& u_minus, const Vec& u_plus, double s,
                     const ShockOptions& opts) {
  if (u_minus.size() != model.n || u_plus.size() != model.n) {
    throw RelaxError(ErrorKind::InvalidInput, "make_shock: endstate dimension must equal n");
  }
  if (!u_minus.allFinite() || !u_plus.allFinite() || !std::isfinite(s)) {
    throw RelaxError(ErrorKind::NonFinite, "make_shock: non-finite input");
  }
  ShockData sh;
  sh.u_minus = u_minus;
  sh.u_plus = u_plus;
  sh.v_minus = model.v_star(u_minus);
  sh.v_plus = model.v_star(u_plus);
  sh.s = s;
  for (Side side : {Side::Minus, Side::Plus}) {
    const Vec u = endstate_u(sh, side), v = endstate_v(sh, side);
    if (model.q(u, v).norm() > 1e-12 * (1.0 + v.norm())) {
      throw RelaxError(ErrorKind::InvalidInput, std::string("make_shock: endstate not an equilibrium (") +
                                                    to_string(side) + ")");
    }
  }
  const Vec rh = model.f(u_plus, sh.v_plus) - model.f(u_minus, sh.v_minus) - s * (u_plus - u_minus);
  if (rh.norm() > 1e-10) {
    throw RelaxError(ErrorKind::InvalidInput,
                     "make_shock: Rankine-Hugoniot residual " + std::to_string(rh.norm()) + " exceeds 1e-10");
  }
  for (Side side : {Side::Minus, Side::Plus}) {
    const Vec u = endstate_u(sh, side), v = endstate_v(sh, side);
    const auto c = jacobians(model, u, v);
    const auto frozen = real_eigen(c.A).values;
    const auto eq = equilibrium_data(model, u).speeds;
    const double gap = std::min((frozen.array() - s).abs().minCoeff(), (eq.array() - s).abs().minCoeff());
    if (gap < opts.speed_margin) {
      throw RelaxError(ErrorKind::InvalidInput, std::string("make_shock: characteristic shock speed at ") +
                                                    to_string(side) + " endstate");
    }
  }
  return sh;
}

// ---------------------------------------------------------------------------

double dissipativity_constant(const Mat& A, const Mat& Q, const std::vector<double>& xis) {
  double theta = std::numeric_limits<double>::infinity();
  for (double xi : xis) {
    if (xi == 0.0) continue;
    const CMat sym = cplx(0, -xi) * A.cast<cplx>() + Q.cast<cplx>();
    Eigen::ComplexEigenSolver<CMat> es(sym, false);
    const double maxre = es.eigenvalues().real().maxCoeff();
    theta = std::min(theta, -maxre * (1.0 + xi * xi) / (xi * xi));
  }
  return theta;
}

bool HypothesisReport::all_pass() const {
  bool ok = h1_constant_multiplicity && h2_equilibrium_hyperbolic && h2_noncharacteristic && h3_dissipative;
  if (subcharacteristic) ok = ok && *subcharacteristic;
  return ok;
}

HypothesisReport check_hypotheses(const RelaxationModel& model, const ShockData& shock,
                                  const HypothesisOptions& opts) {
  HypothesisReport rep;
  const auto xis = logspace(opts.xi_min, opts.xi_max, static_cast<std::size_t>(opts.xi_count));

  // (H1) along the segment joining the endstates, evaluated on the equilibrium manifold
  rep.h1_constant_multiplicity = true;
  const int ns = std::max(2, opts.segment_samples);
  rep.theta_interior = std::numeric_limits<double>::infinity();
  for (int k = 0; k < ns; ++k) {
    const double t = static_cast<double>(k) / (ns - 1);
    const Vec u = (1.0 - t) * shock.u_minus + t * shock.u_plus;
    try {
      const Vec v = model.v_star(u);
      const auto c = frame_jacobians(model, u, v, shock.s);
      const auto eig = real_eigen(c.A);
      const auto pat = multiplicity_pattern(eig.values, 1e-8 * (1.0 + c.A.norm()));
      if (k == 0) {
        rep.h1_pattern = pat;
      } else if (pat != rep.h1_pattern) {
        rep.h1_constant_multiplicity = false;
        rep.messages.push_back("H1: multiplicity pattern changes at segment parameter " + std::to_string(t));
      }
      rep.theta_interior = std::min(rep.theta_interior, dissipativity_constant(c.A, c.Q, xis));
    } catch (const RelaxError& e) {
      rep.h1_constant_multiplicity = false;
      rep.messages.push_back(std::string("H1: ") + e.what());
    }
  }

  // (H2)
  rep.h2_equilibrium_hyperbolic = true;
  rep.h2_noncharacteristic = true;
  for (Side side : {Side::Minus, Side::Plus}) {
    const Vec u = endstate_u(shock, side);
    try {
      const auto eq = equilibrium_data(model, u);
      for (Eigen::Index i = 1; i < eq.speeds.size(); ++i) {
        if (std::abs(eq.speeds(i) - eq.speeds(i - 1)) <= 1e-8 * (1.0 + eq.df_star.norm())) {
          rep.h2_equilibrium_hyperbolic = false;
          rep.messages.push_back(std::string("H2: repeated equilibrium speed at ") + to_string(side));
        }
      }
      if ((eq.speeds.array() - shock.s).abs().minCoeff() < opts.speed_margin) {
        rep.h2_noncharacteristic = false;
        rep.messages.push_back(std::string("H2: shock speed is an equilibrium characteristic at ") +
                               to_string(side));
      }
    } catch (const RelaxError& e) {
      rep.h2_equilibrium_hyperbolic = false;
      rep.messages.push_back(std::string("H2: ") + e.what());
    }
  }

  // (H3) at the endstates
  rep.eta_positive = true;
  rep.beta_positive = true;
  try {
    const auto cm = frame_jacobians(model, shock.u_minus, shock.v_minus, shock.s);
    const auto cp = frame_jacobians(model, shock.u_plus, shock.v_plus, shock.s);
    rep.theta_minus = dissipativity_constant(cm.A, cm.Q, xis);
    rep.theta_plus = dissipativity_constant(cp.A, cp.Q, xis);
    rep.theta_est = std::min(rep.theta_minus, rep.theta_plus);
    rep.h3_dissipative = rep.theta_est > 0.0;
    for (Side side : {Side::Minus, Side::Plus}) {
      const auto md = mode_data(model, endstate_u(shock, side), shock.s);
      for (const auto& eta : md.characteristic.eta) {
        Eigen::EigenSolver<Mat> es(eta, false);
        if (es.eigenvalues().real().minCoeff() <= 0.0) rep.eta_positive = false;
      }
      if (md.chapman_enskog.beta_diag.minCoeff() <= 0.0) rep.beta_positive = false;
    }
  } catch (const RelaxError& e) {
    rep.h3_dissipative = false;
    rep.messages.push_back(std::string("H3: ") + e.what());
  }
  if (!rep.h3_dissipative) rep.messages.push_back("H3: dissipativity constant is not positive");
  if (rep.h3_dissipative && !(rep.eta_positive && rep.beta_positive)) {
    rep.messages.push_back("H3: theta positive but eta/beta sign check failed");
  }
  rep.interior_warning = !(rep.theta_interior > 0.0);
  if (rep.interior_warning) rep.messages.push_back("warning: interior state along the segment is not dissipative");

  if (model.kind == ModelKind::JinXin) {
    double worst = std::numeric_limits<double>::infinity();
    for (Side side : {Side::Minus, Side::Plus}) {
      const Vec u = endstate_u(shock, side);
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double dh = poly_deriv(model.h_poly, u(i));
        worst = std::min(worst, model.a * model.a - dh * dh);
      }
    }
    rep.subcharacteristic_margin = worst;
    rep.subcharacteristic = worst > 1e-12;
    if (!*rep.subcharacteristic) rep.messages.push_back("subcharacteristic condition a^2 > dh^2 fails");
  }
  return rep;
}

// ---------------------------------------------------------------------------

CVec dispersion_exact(const RelaxationModel& model, const ShockData& shock, Side side, double xi) {
  const auto c = frame_jacobians(model, endstate_u(shock, side), endstate_v(shock, side), shock.s);
  const CMat sym = cplx(0, -xi) * c.A.cast<cplx>() + c.Q.cast<cplx>();
  Eigen::ComplexEigenSolver<CMat> es(sym, false);
  if (es.info() != Eigen::Success) throw RelaxError(ErrorKind::NonConvergence, "dispersion_exact: eigensolver failed");
  CVec ev = es.eigenvalues();
  std::sort(ev.data(), ev.data() + ev.size(), [](cplx a, cplx b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() < b.imag();
  });
  return ev;
}

namespace {

double assignment_cost(const CVec& prev, const CVec& next, const std::vector<int>& perm) {
  double c = 0.0;
  for (std::size_t i = 0; i < perm.size(); ++i) c += std::abs(prev(i) - next(perm[i]));
  return c;
}

// Best and second-best permutation costs.
std::pair<std::vector<int>, double> best_assignment(const CVec& prev, const CVec& next, double* runner_up) {
  const auto N = prev.size();
  std::vector<int> perm(N);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity(), second = best;
  std::vector<int> best_perm = perm;
  if (N <= 7) {
    do {
      const double c = assignment_cost(prev, next, perm);
      if (c < best) {
        second = best;
        best = c;
        best_perm = perm;
      } else if (c < second) {
        second = c;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    std::vector<bool> used(N, false);
    for (Eigen::Index i = 0; i < N; ++i) {
      int arg = -1;
      double d = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < N; ++j) {
        if (!used[j] && std::abs(prev(i) - next(j)) < d) {
          d = std::abs(prev(i) - next(j));
          arg = static_cast<int>(j);
        }
      }
      used[arg] = true;
      best_perm[i] = arg;
    }
    best = assignment_cost(prev, next, best_perm);
  }
  if (runner_up) *runner_up = second;
  return {best_perm, best};
}

CVec apply_perm(const CVec& next, const std::vector<int>& perm) {
  CVec out(next.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out(i) = next(perm[i]);
  return out;
}

}  // namespace

CVec match_branches(const CVec& prev, const CVec& next) {
  if (prev.size() != next.size()) throw RelaxError(ErrorKind::InvalidInput, "match_branches: size mismatch");
  return apply_perm(next, best_assignment(prev, next, nullptr).first);
}

std::vector<int> match_permutation(const CVec& prev, const CVec& next) {
  if (prev.size() != next.size()) throw RelaxError(ErrorKind::InvalidInput, "match_permutation: size mismatch");
  return best_assignment(prev, next, nullptr).first;
}

std::vector<CVec> dispersion_sweep(const RelaxationModel& model, const ShockData& shock, Side side,
                                   const std::vector<double>& xis) {
  std::vector<CVec> out;
  out.reserve(xis.size());
  for (std::size_t k = 0; k < xis.size(); ++k) {
    CVec next = dispersion_exact(model, shock, side, xis[k]);
    if (k == 0) {
      out.push_back(next);
      continue;
    }
    // ambiguous matches are resolved through intermediate half steps
    CVec prev = out.back();
    double lo = xis[k - 1];
    const double hi = xis[k];
    int depth = 0;
    while (true) {
      double second = 0.0;
      auto [perm, best] = best_assignment(prev, next, &second);
      const bool ambiguous = std::isfinite(second) && second - best < 1e-3 * (best + 1e-14) && best > 1e-12;
      if (!ambiguous || depth >= 12) {
        next = apply_perm(next, perm);
        break;
      }
      const double mid = 0.5 * (lo + hi);
      prev = match_branches(prev, dispersion_exact(model, shock, side, mid));
      lo = mid;
      ++depth;
    }
    out.push_back(next);
  }
  return out;
}

Mat reduced_traveling_wave_matrix(const RelaxationModel& model, const Vec& u, const Vec& v, double s) {
  const auto J = state_jacobians(model, u, v);
  const auto c = frame_jacobians(model, u, v, s);
  Mat qrow(model.r, model.dim());
  qrow << J.q_u, J.q_v;
  Mat sel = Mat::Zero(model.dim(), model.r);
  sel.bottomRows(model.r) = Mat::Identity(model.r, model.r);
  Eigen::FullPivLU<Mat> lu(c.A);
  if (!lu.isInvertible()) throw RelaxError(ErrorKind::Singular, "reduced_traveling_wave_matrix: A - s singular");
  return qrow * lu.solve(sel);
}

}  // namespace relax

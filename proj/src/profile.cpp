#include "relax/profile.hpp"

#include <algorithm>
#include <cmath>

namespace relax {

const char* to_string(ShockType t) {
  switch (t) {
    case ShockType::Lax: return "lax";
    case ShockType::Overcompressive: return "overcompressive";
    case ShockType::Undercompressive: return "undercompressive";
    case ShockType::Mixed: return "mixed";
    case ShockType::None: return "none";
  }
  return "none";
}

namespace {

Vec full_state(const Vec& u, const Vec& v) {
  Vec w(u.size() + v.size());
  w << u, v;
  return w;
}

// Traveling-wave vector field (A - s) U' = (0; q).
Vec tw_field(const RelaxationModel& m, double s, const Vec& U) {
  const Vec u = U.head(m.n), v = U.tail(m.r);
  const auto c = frame_jacobians(m, u, v, s);
  Vec rhs = Vec::Zero(m.dim());
  rhs.tail(m.r) = m.q(u, v);
  return c.A.partialPivLu().solve(rhs);
}

Mat tw_field_jacobian(const RelaxationModel& m, double s, const Vec& U) {
  const int N = m.dim();
  Mat J(N, N);
  for (int k = 0; k < N; ++k) {
    const double h = 1e-6 * (1.0 + std::abs(U(k)));
    Vec p = U, q = U;
    p(k) += h;
    q(k) -= h;
    J.col(k) = (tw_field(m, s, p) - tw_field(m, s, q)) / (2.0 * h);
  }
  return J;
}

template <class F>
Vec rk4(const F& f, const Vec& y, double h) {
  const Vec k1 = f(y);
  const Vec k2 = f(y + 0.5 * h * k1);
  const Vec k3 = f(y + 0.5 * h * k2);
  const Vec k4 = f(y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

int phase_component(const ShockData& sh) {
  if (std::abs(sh.u_plus(0) - sh.u_minus(0)) > 0.0) return 0;
  Eigen::Index idx = 0;
  (sh.u_plus - sh.u_minus).cwiseAbs().maxCoeff(&idx);
  return static_cast<int>(idx);
}

void make_grid(ShockProfile& p, double X, double dx) {
  if (!(X > 0.0) || !(dx > 0.0) || dx > X) throw RelaxError(ErrorKind::InvalidInput, "profile: need 0 < dx <= X");
  const int K = static_cast<int>(std::ceil(X / dx - 1e-9));
  p.dx = X / K;
  p.X = X;
  p.x.resize(2 * K + 1);
  for (int k = 0; k <= 2 * K; ++k) p.x[k] = (k - K) * p.dx;
  p.x[K] = 0.0;
}

}  // namespace

std::pair<double, double> predicted_tail_rates(const RelaxationModel& model, const ShockData& shock) {
  auto rates = [&](Side side) {
    const Mat M = reduced_traveling_wave_matrix(model, endstate_u(shock, side), endstate_v(shock, side), shock.s);
    Eigen::EigenSolver<Mat> es(M, false);
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      const double re = es.eigenvalues()(i).real();
      if (side == Side::Minus && re > 0) best = std::min(best, re);
      if (side == Side::Plus && re < 0) best = std::min(best, -re);
    }
    return best;
  };
  return {rates(Side::Minus), rates(Side::Plus)};
}

double default_half_width(const RelaxationModel& model, const ShockData& shock) {
  const auto [nm, np] = predicted_tail_rates(model, shock);
  const double nu = std::min(nm, np);
  if (!std::isfinite(nu) || nu <= 0.0) return 40.0;
  return std::max(40.0, 16.0 / nu);
}

Classification classify(const RelaxationModel& model, const ShockData& shock) {
  if ((shock.u_plus - shock.u_minus).norm() == 0.0) {
    throw RelaxError(ErrorKind::Degenerate, "classify: u- == u+ is not a shock");
  }
  Classification c;
  const auto em = equilibrium_data(model, shock.u_minus);
  const auto ep = equilibrium_data(model, shock.u_plus);
  for (Eigen::Index j = 0; j < em.speeds.size(); ++j) {
    if (em.speeds(j) - shock.s > 0) ++c.i_minus;
    if (ep.speeds(j) - shock.s < 0) ++c.i_plus;
  }
  c.i = c.i_minus + c.i_plus;
  auto count = [&](Side side, bool unstable) {
    const Mat M = reduced_traveling_wave_matrix(model, endstate_u(shock, side), endstate_v(shock, side), shock.s);
    Eigen::EigenSolver<Mat> es(M, false);
    int k = 0;
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      const double re = es.eigenvalues()(i).real();
      if (std::abs(re) < 1e-12 * (1.0 + M.norm())) {
        throw RelaxError(ErrorKind::Degenerate, "classify: reduced rest point is not hyperbolic");
      }
      if ((re > 0) == unstable) ++k;
    }
    return k;
  };
  c.d_minus = count(Side::Minus, true);
  c.d_plus = count(Side::Plus, false);
  c.d = c.d_minus + c.d_plus;
  c.ell = 1;
  c.index_identity = (c.d - model.r == c.i - model.n);
  if (!c.index_identity) {
    throw RelaxError(ErrorKind::IndexMismatch, "classify: d - r = " + std::to_string(c.d - model.r) +
                                                   " but i - n = " + std::to_string(c.i - model.n));
  }
  if (c.i == model.n + 1) {
    c.type = ShockType::Lax;
  } else if (c.i <= model.n) {
    c.type = ShockType::Undercompressive;
  } else {
    c.type = ShockType::Overcompressive;
  }
  const int pure_ell = c.type == ShockType::Overcompressive ? c.i - model.n : 1;
  c.pure = (c.ell == pure_ell);
  if (!c.pure) c.type = ShockType::Mixed;
  c.extreme = (c.i_plus == model.n || c.i_minus == model.n);
  return c;
}

Vec ShockProfile::state(int k) const { return full_state(u.col(k), v.col(k)); }
Vec ShockProfile::derivative(int k) const { return full_state(du.col(k), dv.col(k)); }

Vec ShockProfile::endstate(Side side) const {
  return full_state(endstate_u(shock, side), endstate_v(shock, side));
}

Vec ShockProfile::state_at(double xq) const {
  if (xq <= x.front()) return xq < x.front() ? endstate(Side::Minus) : state(0);
  if (xq >= x.back()) return xq > x.back() ? endstate(Side::Plus) : state(size() - 1);
  const double t = (xq - x.front()) / dx;
  int k = std::min(static_cast<int>(t), size() - 2);
  const double s = t - k;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  return h00 * state(k) + h10 * dx * derivative(k) + h01 * state(k + 1) + h11 * dx * derivative(k + 1);
}

Vec ShockProfile::derivative_at(double xq) const {
  if (xq < x.front() || xq > x.back()) return Vec::Zero(dim());
  const double t = (xq - x.front()) / dx;
  int k = std::min(static_cast<int>(t), size() - 2);
  const double s = t - k;
  const double d00 = 6 * s * s - 6 * s, d10 = 3 * s * s - 4 * s + 1;
  const double d01 = -6 * s * s + 6 * s, d11 = 3 * s * s - 2 * s;
  return (d00 * state(k) + d01 * state(k + 1)) / dx + d10 * derivative(k) + d11 * derivative(k + 1);
}

namespace {

void solve_jin_xin(ShockProfile& p, const ProfileOptions& opts) {
  const auto& m = p.model;
  const auto& sh = p.shock;
  const double s = sh.s;
  const double denom = m.a * m.a - s * s;
  const int M = p.size(), K = p.centre();
  p.u.resize(m.n, M);
  p.du.resize(m.n, M);
  for (int i = 0; i < m.n; ++i) {
    const double um = sh.u_minus(i), up = sh.u_plus(i);
    const double c = poly_eval(m.h_poly, um) - s * um;
    auto rhs = [&](double w) { return (poly_eval(m.h_poly, w) - s * w - c) / denom; };
    if (um == up) {
      p.u.row(i).setConstant(um);
      p.du.row(i).setZero();
      continue;
    }
    const double h = p.dx / opts.substeps;
    auto step = [&](double w, double hh) {
      const double k1 = rhs(w), k2 = rhs(w + 0.5 * hh * k1), k3 = rhs(w + 0.5 * hh * k2), k4 = rhs(w + hh * k3);
      return w + hh / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    };
    const double lo = std::min(um, up), hi = std::max(um, up);
    p.u(i, K) = 0.5 * (um + up);
    for (int dir : {1, -1}) {
      double w = p.u(i, K);
      for (int k = K + dir; k >= 0 && k < M; k += dir) {
        for (int sub = 0; sub < opts.substeps; ++sub) w = step(w, dir * h);
        if (!std::isfinite(w) || w < lo - 1e-6 * (hi - lo) || w > hi + 1e-6 * (hi - lo)) {
          throw RelaxError(ErrorKind::NoConnection, "solve_profile: profile leaves the endstate interval");
        }
        p.u(i, k) = w;
      }
    }
    for (int k = 0; k < M; ++k) p.du(i, k) = rhs(p.u(i, k));
  }
  // v = s u + (v- - s u-)
  p.v.resize(m.r, M);
  p.dv = s * p.du;
  for (int k = 0; k < M; ++k) p.v.col(k) = s * p.u.col(k) + (sh.v_minus - s * sh.u_minus);
}

void solve_by_shooting(ShockProfile& p, const ProfileOptions& opts) {
  const auto& m = p.model;
  const auto& sh = p.shock;
  const double s = sh.s;
  const int N = m.dim();
  const Vec Um = p.endstate(Side::Minus), Up = p.endstate(Side::Plus);
  const double scale = 1.0 + (Up - Um).norm();
  auto F = [&](const Vec& U) { return tw_field(m, s, U); };

  const Mat J = tw_field_jacobian(m, s, Um);
  Eigen::EigenSolver<Mat> es(J, true);
  std::vector<int> unstable;
  for (int i = 0; i < N; ++i) {
    if (es.eigenvalues()(i).real() > 1e-9 * (1.0 + J.norm())) unstable.push_back(i);
  }
  if (unstable.size() != 1) {
    throw RelaxError(ErrorKind::Unsupported,
                     "solve_profile: shooting needs a one-dimensional unstable manifold at u-, found " +
                         std::to_string(unstable.size()));
  }
  const double rate = es.eigenvalues()(unstable[0]).real();
  Vec dir = es.eigenvectors().col(unstable[0]).real();
  dir.normalize();

  const int pc = phase_component(sh);
  const double mid = 0.5 * (sh.u_minus(pc) + sh.u_plus(pc));
  const double h = p.dx / opts.substeps;
  const double max_len = 60.0 / rate + 100.0;

  Vec crossing;
  for (double sign : {1.0, -1.0}) {
    Vec U = Um + sign * opts.shoot_eps * scale * dir;
    const double side0 = U(pc) - mid;
    bool found = false;
    for (double xs = 0.0; xs < max_len; xs += h) {
      Vec next = rk4(F, U, h);
      if (!next.allFinite() || (next - Um).norm() > 1e3 * scale) break;
      if ((next(pc) - mid) * side0 <= 0.0) {
        // bisect the partial step for the exact crossing
        double a = 0.0, b = h;
        for (int it = 0; it < 80; ++it) {
          const double c = 0.5 * (a + b);
          if ((rk4(F, U, c)(pc) - mid) * side0 > 0.0) a = c; else b = c;
        }
        crossing = rk4(F, U, 0.5 * (a + b));
        found = true;
        break;
      }
      U = next;
    }
    if (found) break;
  }
  if (crossing.size() == 0) {
    throw RelaxError(ErrorKind::NoConnection, "solve_profile: unstable manifold never reaches the phase condition");
  }

  const int M = p.size(), K = p.centre();
  Mat W(N, M);
  W.col(K) = crossing;
  for (int d : {1, -1}) {
    Vec U = crossing;
    for (int k = K + d; k >= 0 && k < M; k += d) {
      for (int sub = 0; sub < opts.substeps; ++sub) U = rk4(F, U, d * h);
      if (!U.allFinite() || (U - Um).norm() > 1e3 * scale) {
        throw RelaxError(ErrorKind::NoConnection, "solve_profile: profile blow-up");
      }
      W.col(k) = U;
    }
  }
  if ((W.col(M - 1) - Up).norm() > 1e-4 * scale) {
    throw RelaxError(ErrorKind::NoConnection, "solve_profile: trajectory misses u+ (error " +
                                                  std::to_string((W.col(M - 1) - Up).norm()) + ")");
  }
  p.u = W.topRows(m.n);
  p.v = W.bottomRows(m.r);
  p.du.resize(m.n, M);
  p.dv.resize(m.r, M);
  for (int k = 0; k < M; ++k) {
    const Vec d = F(W.col(k));
    p.du.col(k) = d.head(m.n);
    p.dv.col(k) = d.tail(m.r);
  }
}

}  // namespace

ShockProfile solve_profile(const RelaxationModel& model, const ShockData& shock, const ProfileOptions& opts) {
  ShockProfile p;
  p.model = model;
  p.shock = shock;
  p.classification = classify(model, shock);
  std::tie(p.nu_minus, p.nu_plus) = predicted_tail_rates(model, shock);
  const double X = opts.X > 0.0 ? opts.X : default_half_width(model, shock);
  make_grid(p, X, opts.dx);
  if (model.kind == ModelKind::JinXin) {
    solve_jin_xin(p, opts);
  } else {
    solve_by_shooting(p, opts);
  }
  if (!p.u.allFinite() || !p.v.allFinite()) throw RelaxError(ErrorKind::NonFinite, "solve_profile: non-finite profile");
  return p;
}

ShockProfile solve_profile(const RelaxationModel& model, const ShockData& shock, double X, double dx) {
  ProfileOptions o;
  o.X = X;
  o.dx = dx;
  return solve_profile(model, shock, o);
}

ShockProfile constant_state_profile(const RelaxationModel& model, const Vec& u, double s, double X, double dx) {
  ShockProfile p;
  p.model = model;
  p.shock.u_minus = p.shock.u_plus = u;
  p.shock.v_minus = p.shock.v_plus = model.v_star(u);
  p.shock.s = s;
  p.constant_state = true;
  p.classification.ell = 0;
  make_grid(p, X, dx);
  const int M = p.size();
  p.u = p.shock.u_minus.replicate(1, M);
  p.v = p.shock.v_minus.replicate(1, M);
  p.du = Mat::Zero(model.n, M);
  p.dv = Mat::Zero(model.r, M);
  return p;
}

TailFit fit_tail(const ShockProfile& p, Side side) {
  TailFit fit;
  fit.predicted = side == Side::Minus ? p.nu_minus : p.nu_plus;
  const Vec Ue = p.endstate(side);
  std::vector<double> xs, ys;
  const int M = p.size(), K = p.centre();
  const int k0 = side == Side::Minus ? 0 : K + K / 2;
  const int k1 = side == Side::Minus ? K / 2 : M - 1;
  for (int k = k0; k <= k1; ++k) {
    const double d = (p.state(k) - Ue).norm();
    if (d > 1e-13 * (1.0 + Ue.norm())) {
      xs.push_back(std::abs(p.x[k]));
      ys.push_back(std::log(d));
    }
  }
  fit.samples = static_cast<int>(xs.size());
  if (xs.size() < 3) return fit;
  const auto lf = fit_line(xs, ys);
  fit.rate = -lf.slope;
  fit.r2 = lf.r2;
  fit.relative_error = std::abs(fit.rate - fit.predicted) / std::abs(fit.predicted);
  return fit;
}

ProfileReport verify_profile(const ShockProfile& p) {
  ProfileReport rep;
  const auto& m = p.model;
  const auto& sh = p.shock;
  rep.rh_residual = (m.f(sh.u_plus, sh.v_plus) - m.f(sh.u_minus, sh.v_minus) - sh.s * (sh.u_plus - sh.u_minus)).norm();
  const Vec c = m.f(sh.u_minus, sh.v_minus) - sh.s * sh.u_minus;
  for (int k = 0; k < p.size(); ++k) {
    const Vec fk = m.f(p.u.col(k), p.v.col(k)) - sh.s * p.u.col(k);
    rep.first_integral_drift = std::max(rep.first_integral_drift, (fk - c).cwiseAbs().maxCoeff());
  }
  rep.endstate_error_minus = (p.state(0) - p.endstate(Side::Minus)).norm();
  rep.endstate_error_plus = (p.state(p.size() - 1) - p.endstate(Side::Plus)).norm();
  rep.endstates_ok = rep.endstate_error_minus <= 1e-6 && rep.endstate_error_plus <= 1e-6;
  rep.first_integral_ok = rep.first_integral_drift <= 1e-8;
  if (!p.constant_state) {
    rep.tail_minus = fit_tail(p, Side::Minus);
    rep.tail_plus = fit_tail(p, Side::Plus);
    rep.tails_exponential = rep.tail_minus.r2 >= 0.999 && rep.tail_plus.r2 >= 0.999;
    rep.rates_match = rep.tail_minus.relative_error <= 0.02 && rep.tail_plus.relative_error <= 0.02;
  } else {
    rep.tails_exponential = rep.rates_match = true;
  }
  if (!rep.endstates_ok) rep.flags.push_back("endstate error exceeds 1e-6 (half-width too small?)");
  if (!rep.first_integral_ok) rep.flags.push_back("first integral drift exceeds 1e-8");
  if (!rep.tails_exponential) rep.flags.push_back("tail decay is not cleanly exponential (R^2 < 0.999)");
  if (!rep.rates_match) rep.flags.push_back("fitted tail rate differs from the predicted rate by more than 2%");
  if (rep.rh_residual > 1e-10) rep.flags.push_back("Rankine-Hugoniot residual exceeds 1e-10");
  return rep;
}

}  // namespace relax

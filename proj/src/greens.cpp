#include "relax/greens.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace relax {

namespace {

constexpr double kPi = std::numbers::pi;

// Per-family characteristic data on the profile grid, with bases transported
// continuously from left to right so that linear interpolation is meaningful.
struct FamilyTable {
  int J = 0, N = 0, M = 0;
  double x0 = 0.0, dx = 1.0;
  std::vector<int> mult;
  std::vector<std::vector<double>> speed;  // [j][k]
  std::vector<std::vector<Mat>> eta, R, L;
  bool scalar = true;
  double max_speed = 0.0;

  // fractional index, clamped to the grid
  void locate(double z, int& k, double& w) const {
    double s = (z - x0) / dx;
    if (s <= 0.0) { k = 0; w = 0.0; return; }
    if (s >= M - 1) { k = M - 2; w = 1.0; return; }
    k = static_cast<int>(s);
    if (k > M - 2) k = M - 2;
    w = s - k;
  }
  double a(int j, double z) const {
    int k; double w;
    locate(z, k, w);
    return (1.0 - w) * speed[j][k] + w * speed[j][k + 1];
  }
  double eta_s(int j, double z) const {
    int k; double w;
    locate(z, k, w);
    return (1.0 - w) * eta[j][k](0, 0) + w * eta[j][k + 1](0, 0);
  }
  Mat eta_m(int j, double z) const {
    int k; double w;
    locate(z, k, w);
    return (1.0 - w) * eta[j][k] + w * eta[j][k + 1];
  }
  Mat right(int j, double z) const {
    int k; double w;
    locate(z, k, w);
    return (1.0 - w) * R[j][k] + w * R[j][k + 1];
  }
  Mat left(int j, double z) const {
    int k; double w;
    locate(z, k, w);
    return (1.0 - w) * L[j][k] + w * L[j][k + 1];
  }
};

FamilyTable family_table(const ShockProfile& p) {
  FamilyTable t;
  t.N = p.dim();
  t.M = p.size();
  t.x0 = p.x.front();
  t.dx = p.dx;
  for (int k = 0; k < t.M; ++k) {
    const Vec w = p.state(k);
    auto cm = hyperbolic_modes(p.model, w.head(p.model.n), w.tail(p.model.r), p.shock.s);
    if (k == 0) {
      t.J = cm.family_count();
      t.mult = cm.multiplicity;
      t.speed.assign(t.J, {});
      t.eta.assign(t.J, {});
      t.R.assign(t.J, {});
      t.L.assign(t.J, {});
    } else if (cm.family_count() != t.J || cm.multiplicity != t.mult) {
      throw RelaxError(ErrorKind::MultiplicityChange, "characteristic multiplicities change along the profile");
    }
    for (int j = 0; j < t.J; ++j) {
      Mat Rj = cm.right[j], Lj = cm.left[j], Ej = cm.eta[j];
      if (k > 0) {
        // align with the previous basis by the orthogonal part of L_new R_prev
        // (a sign for simple families), so products R L stay exact projectors
        const Mat P = Lj * t.R[j].back();
        Eigen::JacobiSVD<Mat> svd(P, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Mat T = svd.matrixU() * svd.matrixV().transpose();
        const Mat Ti = T.transpose();
        Rj = Rj * T;
        Lj = Ti * Lj;
        Ej = Ti * Ej * T;
      }
      t.speed[j].push_back(cm.speed[j]);
      t.max_speed = std::max(t.max_speed, std::abs(cm.speed[j]));
      t.R[j].push_back(std::move(Rj));
      t.L[j].push_back(std::move(Lj));
      t.eta[j].push_back(std::move(Ej));
    }
  }
  for (int m : t.mult) t.scalar = t.scalar && m == 1;
  return t;
}

double path_step(const FamilyTable& ft, double t) {
  const double h = ft.max_speed > 0.0 ? ft.dx / ft.max_speed : t / 100.0;
  return std::min(h, t / 100.0);
}

// RK4 for z' = dir * a_j(z) together with the amplitude ODE.
// forward (dir = +1): zeta' = -eta zeta.  backward (dir = -1): V' = -V eta,
// which yields zeta(t) of the forward path that ends at the start point.
struct PathResult {
  double z = 0.0;
  Mat amp;
  Mat eta_int;
  double eta_min = 1e300;
};

PathResult integrate_path(const FamilyTable& ft, int j, double z0, double t, int dir) {
  const int m = ft.mult[j];
  PathResult r;
  r.z = z0;
  r.amp = Mat::Identity(m, m);
  r.eta_int = Mat::Zero(m, m);
  auto note_eta = [&](const Mat& e) {
    double lo;
    if (m == 1) lo = e(0, 0);
    else lo = Eigen::EigenSolver<Mat>(e, false).eigenvalues().real().minCoeff();
    r.eta_min = std::min(r.eta_min, lo);
  };
  if (t <= 0.0) {
    note_eta(ft.eta_m(j, z0));
    return r;
  }
  const int steps = static_cast<int>(std::ceil(t / path_step(ft, t) - 1e-9));
  const double h = t / steps;
  const double d = dir;

  if (m == 1) {
    // scalar: log amplitude is -int eta, independent of direction
    double z = z0, I = 0.0;
    r.eta_min = ft.eta_s(j, z);
    for (int s = 0; s < steps; ++s) {
      const double k1 = d * ft.a(j, z), e1 = ft.eta_s(j, z);
      const double z2 = z + 0.5 * h * k1;
      const double k2 = d * ft.a(j, z2), e2 = ft.eta_s(j, z2);
      const double z3 = z + 0.5 * h * k2;
      const double k3 = d * ft.a(j, z3), e3 = ft.eta_s(j, z3);
      const double z4 = z + h * k3;
      const double k4 = d * ft.a(j, z4), e4 = ft.eta_s(j, z4);
      z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      I += h / 6.0 * (e1 + 2.0 * e2 + 2.0 * e3 + e4);
      r.eta_min = std::min(r.eta_min, std::min(e1, e4));
    }
    r.z = z;
    r.eta_int(0, 0) = I;
    r.amp(0, 0) = std::exp(-I);
    return r;
  }

  double z = z0;
  Mat Z = r.amp;
  note_eta(ft.eta_m(j, z));
  auto rhs = [&](const Mat& e, const Mat& Y) -> Mat { return dir > 0 ? Mat(-e * Y) : Mat(-Y * e); };
  for (int s = 0; s < steps; ++s) {
    const Mat e1 = ft.eta_m(j, z);
    const double k1 = d * ft.a(j, z);
    const Mat Y1 = rhs(e1, Z);
    const double z2 = z + 0.5 * h * k1;
    const Mat e2 = ft.eta_m(j, z2);
    const double k2 = d * ft.a(j, z2);
    const Mat Y2 = rhs(e2, Z + 0.5 * h * Y1);
    const double z3 = z + 0.5 * h * k2;
    const Mat e3 = ft.eta_m(j, z3);
    const double k3 = d * ft.a(j, z3);
    const Mat Y3 = rhs(e3, Z + 0.5 * h * Y2);
    const double z4 = z + h * k3;
    const Mat e4 = ft.eta_m(j, z4);
    const double k4 = d * ft.a(j, z4);
    const Mat Y4 = rhs(e4, Z + h * Y3);
    z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    Z += h / 6.0 * (Y1 + 2.0 * Y2 + 2.0 * Y3 + Y4);
    r.eta_int += h / 6.0 * (e1 + 2.0 * e2 + 2.0 * e3 + e4);
    note_eta(e4);
  }
  r.z = z;
  r.amp = Z;
  return r;
}

// linear interpolation of the columns of f, zero outside the grid
Vec sample(const ShockProfile& p, const Mat& f, double y) {
  const double s = (y - p.x.front()) / p.dx;
  const int M = p.size();
  if (s < -1e-9 || s > M - 1 + 1e-9) return Vec::Zero(f.rows());
  const double sr = std::round(s);
  if (std::abs(s - sr) < 1e-9) return f.col(static_cast<int>(sr));  // on a node
  int k = static_cast<int>(s);
  if (k >= M - 1) return f.col(M - 1);
  const double w = s - k;
  return (1.0 - w) * f.col(k) + w * f.col(k + 1);
}

double gaussian(double z, double beta, double t) {
  if (beta <= 0.0 || t <= 0.0) return 0.0;
  const double var = 2.0 * beta * t;
  if (z * z > 144.0 * var) return 0.0;  // 12 sigma
  return std::exp(-z * z / (4.0 * beta * t)) / std::sqrt(4.0 * kPi * beta * t);
}

// 1/(1 + e^{2x}) without overflow
double weight_left(double x) { return 0.5 * (1.0 - std::tanh(x)); }
double weight_right(double x) { return 0.5 * (1.0 + std::tanh(x)); }

double trap_weight(const ShockProfile& p, int k) {
  return (k == 0 || k == p.size() - 1) ? 0.5 * p.dx : p.dx;
}

}  // namespace

// ---------------------------------------------------------------------------

CharacteristicPath characteristic_path(const ShockProfile& profile, int family, double y, double t) {
  if (t < 0.0) throw RelaxError(ErrorKind::InvalidInput, "characteristic_path: t must be >= 0");
  const auto ft = family_table(profile);
  if (family < 0 || family >= ft.J) throw RelaxError(ErrorKind::InvalidInput, "characteristic_path: no such family");
  const auto r = integrate_path(ft, family, y, t, +1);
  CharacteristicPath out;
  out.family = family;
  out.y = y;
  out.t = t;
  out.z = r.z;
  out.zeta = r.amp;
  out.eta_bar = t > 0.0 ? Mat(r.eta_int / t) : ft.eta_m(family, y);
  out.a_bar = t > 0.0 ? (r.z - y) / t : ft.a(family, y);
  out.eta_min = r.eta_min;
  return out;
}

Mat H_apply(const ShockProfile& profile, const Mat& f, double t) {
  const int N = profile.dim(), M = profile.size();
  if (f.rows() != N || f.cols() != M) throw RelaxError(ErrorKind::InvalidInput, "H_apply: f must be N x M");
  if (t < 0.0) throw RelaxError(ErrorKind::InvalidInput, "H_apply: t must be >= 0");
  const auto ft = family_table(profile);
  Mat out = Mat::Zero(N, M);
  for (int i = 0; i < M; ++i) {
    const double x = profile.x[i];
    for (int j = 0; j < ft.J; ++j) {
      const auto r = integrate_path(ft, j, x, t, -1);
      const Vec fy = sample(profile, f, r.z);
      if (fy.isZero(0.0)) continue;
      const Mat Lj = t > 0.0 ? ft.left(j, r.z) : ft.L[j][i];
      out.col(i) += ft.R[j][i] * (r.amp * (Lj * fy));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

ScatteringTable scattering_solve(const ShockProfile& profile) {
  const auto& model = profile.model;
  const auto& shock = profile.shock;
  const int n = model.n, N = model.dim();
  // exact mass u- - u+ (the integral over the line), not the truncated quadrature
  const auto d = liu_majda_delta(model, shock);
  if (d.degenerate) {
    throw RelaxError(ErrorKind::Degenerate,
                     "scattering_solve: condition (D2) fails, Liu-Majda determinant vanishes");
  }
  ScatteringTable tab;
  tab.mass = d.mass;
  tab.system = d.matrix;
  tab.delta = d.delta;
  tab.liu_majda = d.delta;
  tab.permutation_sign = 1;

  const auto md_m = mode_data(model, shock.u_minus, shock.s);
  const auto md_p = mode_data(model, shock.u_plus, shock.s);
  const auto& ce_m = md_m.chapman_enskog;
  const auto& ce_p = md_p.chapman_enskog;
  for (int j = 0; j < n; ++j) {
    const double am = md_m.equilibrium.speeds(j) - shock.s;
    if (am < 0.0)
      tab.out_minus.push_back({j, am, ce_m.beta_diag(j), md_m.R_star.col(j), md_m.L_star.row(j).transpose()});
  }
  for (int j = 0; j < n; ++j) {
    const double ap = md_p.equilibrium.speeds(j) - shock.s;
    if (ap > 0.0)
      tab.out_plus.push_back({j, ap, ce_p.beta_diag(j), md_p.R_star.col(j), md_p.L_star.row(j).transpose()});
  }

  const Eigen::FullPivLU<Mat> lu(tab.system);
  Vec pi_side[2] = {Vec::Zero(N), Vec::Zero(N)};
  for (Side side : {Side::Minus, Side::Plus}) {
    const auto& md = side == Side::Minus ? md_m : md_p;
    const auto& ce = side == Side::Minus ? ce_m : ce_p;
    for (int k = 0; k < n; ++k) {
      const double a = md.equilibrium.speeds(k) - shock.s;
      const bool incoming = side == Side::Minus ? a > 0.0 : a < 0.0;
      if (!incoming) continue;
      ScatteringEntry e;
      e.side = side;
      e.family = k;
      e.speed = a;
      e.beta = ce.beta_diag(k);
      e.r_star = md.equilibrium.right.col(k);
      e.R_star = md.R_star.col(k);
      e.L_star = md.L_star.row(k).transpose();
      const Vec c = lu.solve(e.r_star);
      e.residual = (tab.system * c - e.r_star).norm();
      const int nm = static_cast<int>(tab.out_minus.size()), np = static_cast<int>(tab.out_plus.size());
      e.c_minus.assign(c.data(), c.data() + nm);
      e.c_plus.assign(c.data() + nm, c.data() + nm + np);
      e.c0 = c(nm + np);
      tab.max_residual = std::max(tab.max_residual, e.residual);
      pi_side[side == Side::Minus ? 0 : 1] += e.c0 * e.L_star;
      tab.entries.push_back(std::move(e));
    }
  }
  tab.pi = pi_side[0];
  tab.pi_consistency = (pi_side[0] - pi_side[1]).norm();

  tab.ubar_prime_mass = Vec::Zero(N);
  const Mat sm = shift_mode(profile);
  for (int k = 0; k < profile.size(); ++k) tab.ubar_prime_mass += trap_weight(profile, k) * sm.col(k);
  return tab;
}

// ---------------------------------------------------------------------------

double errfn_bracket(double y, double t, double speed, double beta) {
  if (t <= 0.0) return 0.0;
  const double a = std::abs(speed) * t, s = std::sqrt(4.0 * beta * t), ay = std::abs(y);
  return errfn((a - ay) / s) - errfn((-a - ay) / s);
}

Mat shift_mode(const ShockProfile& profile) {
  Mat out(profile.dim(), profile.size());
  for (int k = 0; k < profile.size(); ++k) out.col(k) = -profile.derivative(k);
  return out;
}

Vec e_kernel(const ScatteringTable& table, double y, double t) {
  const Side side = y <= 0.0 ? Side::Minus : Side::Plus;
  Vec e = Vec::Zero(table.pi.size());
  for (const auto& en : table.entries) {
    if (en.side != side) continue;
    e += en.c0 * errfn_bracket(y, t, en.speed, en.beta) * en.L_star;
  }
  return e;
}

Mat E_eval(const ShockProfile& profile, const ScatteringTable& table, double x, double t, double y) {
  const Vec dU = -profile.derivative_at(x);
  return dU * e_kernel(table, y, t).transpose();
}

Mat S_eval(const ShockProfile& profile, const ScatteringTable& table, double x, double t, double y) {
  const int N = profile.dim();
  Mat S = Mat::Zero(N, N);
  if (t < 1.0) return S;
  const Side side = y <= 0.0 ? Side::Minus : Side::Plus;
  const auto md = mode_data(profile.model, side == Side::Minus ? profile.shock.u_minus : profile.shock.u_plus,
                            profile.shock.s);
  const int n = profile.model.n;
  // signal stays on the near side: weight ~ 1 there, ~ 0 across the shock
  const double w_near = side == Side::Minus ? weight_left(x) : weight_right(x);
  for (int k = 0; k < n; ++k) {
    const double a = md.equilibrium.speeds(k) - profile.shock.s;
    const double beta = md.chapman_enskog.beta_diag(k);
    const bool incoming = side == Side::Minus ? a > 0.0 : a < 0.0;
    const double g = gaussian(x - y - a * t, beta, t);
    if (g == 0.0) continue;
    S += (incoming ? w_near : 1.0) * g * (md.R_star.col(k) * md.L_star.row(k));
  }
  for (const auto& en : table.entries) {
    if (en.side != side) continue;
    const double ak = std::abs(en.speed), tk = std::abs(y) / ak;
    auto scattered = [&](const OutgoingMode& o, double c, double w) {
      if (c == 0.0 || w == 0.0) return;
      const double z = o.speed * (t - tk);
      const double bb = std::abs(x) / std::abs(o.speed * t) * o.beta +
                        tk / t * (o.speed / en.speed) * (o.speed / en.speed) * en.beta;
      const double g = gaussian(x - z, std::max(bb, 1e-12), t);
      if (g != 0.0) S += c * w * g * (o.R_star * en.L_star.transpose());
    };
    for (std::size_t j = 0; j < table.out_minus.size(); ++j)
      scattered(table.out_minus[j], en.c_minus[j], weight_left(x));
    for (std::size_t j = 0; j < table.out_plus.size(); ++j)
      scattered(table.out_plus[j], en.c_plus[j], weight_right(x));
  }
  return S;
}

LinearShift linear_shift(const ShockProfile& profile, const ScatteringTable& table, const Mat& U0, double t) {
  if (U0.rows() != profile.dim() || U0.cols() != profile.size())
    throw RelaxError(ErrorKind::InvalidInput, "linear_shift: U0 must be N x M");
  LinearShift ls;
  for (int k = 0; k < profile.size(); ++k)
    ls.delta += trap_weight(profile, k) * e_kernel(table, profile.x[k], t).dot(U0.col(k));
  ls.phi = ls.delta * shift_mode(profile);
  return ls;
}

GreenApplication green_apply(const ShockProfile& profile, const ScatteringTable& table, const Mat& f, double t) {
  const int N = profile.dim(), M = profile.size();
  if (f.rows() != N || f.cols() != M) throw RelaxError(ErrorKind::InvalidInput, "green_apply: f must be N x M");
  GreenApplication g;
  g.H = H_apply(profile, f, t);
  g.E = linear_shift(profile, table, f, t).phi;
  g.S = Mat::Zero(N, M);
  if (t < 1.0) return g;

  // S by trapezoid in y; rows of S(x, t; y) f(y) are assembled from rank-one
  // pieces with precomputed projections L f(y)
  const auto md_m = mode_data(profile.model, profile.shock.u_minus, profile.shock.s);
  const auto md_p = mode_data(profile.model, profile.shock.u_plus, profile.shock.s);
  const int n = profile.model.n;
  std::vector<double> xs = profile.x;
  for (int jy = 0; jy < M; ++jy) {
    const double y = profile.x[jy];
    const Vec fy = f.col(jy) * trap_weight(profile, jy);
    if (fy.isZero(0.0)) continue;
    const Side side = y <= 0.0 ? Side::Minus : Side::Plus;
    const auto& md = side == Side::Minus ? md_m : md_p;
    for (int k = 0; k < n; ++k) {
      const double a = md.equilibrium.speeds(k) - profile.shock.s;
      const double beta = md.chapman_enskog.beta_diag(k);
      const bool incoming = side == Side::Minus ? a > 0.0 : a < 0.0;
      const double proj = md.L_star.row(k).dot(fy);
      if (proj == 0.0) continue;
      const double centre = y + a * t, reach = 12.0 * std::sqrt(2.0 * beta * t);
      const int lo = std::max(0, static_cast<int>(std::floor((centre - reach - xs[0]) / profile.dx)));
      const int hi = std::min(M - 1, static_cast<int>(std::ceil((centre + reach - xs[0]) / profile.dx)));
      for (int i = lo; i <= hi; ++i) {
        const double x = xs[i];
        double w = 1.0;
        if (incoming) w = side == Side::Minus ? weight_left(x) : weight_right(x);
        g.S.col(i) += (w * gaussian(x - centre, beta, t) * proj) * md.R_star.col(k);
      }
    }
    for (const auto& en : table.entries) {
      if (en.side != side) continue;
      const double proj = en.L_star.dot(fy);
      if (proj == 0.0) continue;
      const double tk = std::abs(y) / std::abs(en.speed);
      auto scattered = [&](const OutgoingMode& o, double c, bool left) {
        if (c == 0.0) return;
        const double z = o.speed * (t - tk);
        for (int i = 0; i < M; ++i) {
          const double x = xs[i];
          const double bb = std::abs(x) / std::abs(o.speed * t) * o.beta +
                            tk / t * (o.speed / en.speed) * (o.speed / en.speed) * en.beta;
          const double w = left ? weight_left(x) : weight_right(x);
          g.S.col(i) += (c * w * gaussian(x - z, std::max(bb, 1e-12), t) * proj) * o.R_star;
        }
      };
      for (std::size_t j = 0; j < table.out_minus.size(); ++j) scattered(table.out_minus[j], en.c_minus[j], true);
      for (std::size_t j = 0; j < table.out_plus.size(); ++j) scattered(table.out_plus[j], en.c_plus[j], false);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

Mat apply_linear_operator(const ShockProfile& profile, const Mat& f) {
  const int N = profile.dim(), M = profile.size();
  if (f.rows() != N || f.cols() != M) throw RelaxError(ErrorKind::InvalidInput, "apply_linear_operator: f must be N x M");
  const int n = profile.model.n, r = profile.model.r;
  Mat AF(N, M), out(N, M);
  for (int k = 0; k < M; ++k) {
    const Vec w = profile.state(k);
    const auto c = frame_jacobians(profile.model, w.head(n), w.tail(r), profile.shock.s);
    AF.col(k) = c.A * f.col(k);
    out.col(k) = c.Q * f.col(k);
  }
  // fourth-order central differences, second order next to the edges
  const double h = profile.dx;
  for (int k = 0; k < M; ++k) {
    Vec d;
    if (k >= 2 && k <= M - 3) d = (AF.col(k - 2) - 8.0 * AF.col(k - 1) + 8.0 * AF.col(k + 1) - AF.col(k + 2)) / (12.0 * h);
    else if (k == 0) d = (-3.0 * AF.col(0) + 4.0 * AF.col(1) - AF.col(2)) / (2.0 * h);
    else if (k == M - 1) d = (3.0 * AF.col(M - 1) - 4.0 * AF.col(M - 2) + AF.col(M - 3)) / (2.0 * h);
    else d = (AF.col(k + 1) - AF.col(k - 1)) / (2.0 * h);
    out.col(k) -= d;
  }
  return out;
}

ContourGreenResult contour_green(const EvansContext& ctx, const Mat& f, double t, const ContourGreenOptions& opts) {
  const auto& p = ctx.profile();
  const int N = p.dim(), M = p.size();
  if (f.rows() != N || f.cols() != M) throw RelaxError(ErrorKind::InvalidInput, "contour_green: f must be N x M");
  if (!(t > 0.0) || !(opts.c > 0.0) || !(opts.domega > 0.0) || !(opts.Xi > opts.domega))
    throw RelaxError(ErrorKind::InvalidInput, "contour_green: need t > 0, c > 0, 0 < domega < Xi");
  if (opts.order < 1 || opts.order > 4) throw RelaxError(ErrorKind::InvalidInput, "contour_green: order must be 1..4");

  // e^{Lt} f = sum_{k<m} t^k L^k f / k! - (1/2pi) int e^{lambda t} G_lambda(L^m f) / lambda^m d omega
  Mat poly = f, Lk = f;
  double coef = 1.0;
  for (int k = 1; k <= opts.order; ++k) {
    Lk = apply_linear_operator(p, Lk);
    if (k < opts.order) {
      coef *= t / k;
      poly += coef * Lk;
    }
  }
  const CMat g = Lk.cast<cplx>();
  const int K = static_cast<int>(std::round(opts.Xi / opts.domega));
  const double dw = opts.Xi / K;

  ContourGreenResult res;
  CMat acc = CMat::Zero(N, M);
  CMat last;
  for (int k = 0; k <= K; ++k) {
    const cplx lam(opts.c, k * dw);
    const auto b = resolvent_bases(ctx, lam);
    CMat I = resolvent_apply(b, g);
    I *= std::exp(lam * t) / std::pow(lam, opts.order);
    const double w = (k == 0 || k == K) ? 0.5 * dw : dw;
    acc += w * I;
    ++res.evaluations;
    if (k == K) last = std::move(I);
  }
  // the integrand over [-Xi, Xi] is twice the real part of the half line
  res.value = poly - acc.real() / kPi;

  // integrand ~ C / omega^{m+1} beyond Xi: tail ~ (Xi / m) |I(Xi)| on each half line
  double tail = 0.0, norm = 0.0;
  for (int k = 0; k < M; ++k) {
    tail += trap_weight(p, k) * last.col(k).cwiseAbs().sum();
    norm += trap_weight(p, k) * res.value.col(k).cwiseAbs().sum();
  }
  res.tail_estimate = opts.Xi / opts.order * tail / kPi / std::max(norm, 1e-300);
  res.tail_ok = res.tail_estimate <= opts.tail_tolerance;
  return res;
}

double l1_norm(const ShockProfile& profile, const Mat& f, std::vector<int> rows) {
  if (rows.empty())
    for (int r = 0; r < f.rows(); ++r) rows.push_back(r);
  double s = 0.0;
  for (int k = 0; k < f.cols(); ++k)
    for (int r : rows) s += trap_weight(profile, k) * std::abs(f(r, k));
  return s;
}

}  // namespace relax

#include "relax/evans.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <numbers>
#include <thread>

namespace relax {

namespace {

constexpr double kPi = std::numbers::pi;

struct PointCoeffs {
  Mat Ai, QAi;
};

PointCoeffs point_coeffs(const ShockProfile& p, const Vec& w, double shift) {
  const int n = p.model.n;
  const auto c = frame_jacobians(p.model, w.head(n), w.tail(p.model.r), p.shock.s);
  Eigen::FullPivLU<Mat> lu(c.A);
  if (!lu.isInvertible()) throw RelaxError(ErrorKind::Singular, "evans: A(x) - s is singular");
  PointCoeffs pc;
  pc.Ai = lu.inverse();
  Mat Q = c.Q;
  Q.diagonal().array() += shift;
  pc.QAi = Q * pc.Ai;
  return pc;
}

PointCoeffs point_coeffs_at(const ShockProfile& p, double x, double shift) {
  return point_coeffs(p, p.state_at(x), shift);
}

double wrap_arg(double a) { return std::remainder(a, 2.0 * kPi); }

int effective_threads(int requested) {
  int t = requested;
  if (const char* env = std::getenv("RELAX_EVANS_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) t = std::min(t, cap);
  }
  return std::max(1, t);
}

// RK4 for Y' = (QAi - lambda Ai - sigma) Y on a coefficient table, two table
// spacings per step so that midpoints are table entries.
struct TableRK4 {
  const EvansContext::Table& T;
  cplx lambda, sigma;
  double spacing;
  CMat k1, k2, k3, k4, tmp;

  void rhs(int j, const CMat& Y, CMat& out) {
    out.noalias() = T.qai(j) * Y;
    out.noalias() -= lambda * (T.ai(j) * Y);
    out -= sigma * Y;
  }

  void step(int j, int dir, CMat& Y) {
    const double h = 2.0 * dir * spacing;
    rhs(j, Y, k1);
    tmp = Y + (0.5 * h) * k1;
    rhs(j + dir, tmp, k2);
    tmp = Y + (0.5 * h) * k2;
    rhs(j + dir, tmp, k3);
    tmp = Y + h * k3;
    rhs(j + 2 * dir, tmp, k4);
    Y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
};

// Thin QR; returns the accumulated complex log det of the R factor.
cplx orthonormalize(CMat& Y, CMat* Rout = nullptr) {
  const auto N = Y.rows(), k = Y.cols();
  Eigen::HouseholderQR<CMat> qr(Y);
  CMat R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  cplx ld = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (std::abs(R(i, i)) == 0.0 || !std::isfinite(std::abs(R(i, i)))) {
      throw RelaxError(ErrorKind::Overflow, "evans: basis collapsed during orthonormalization");
    }
    ld += std::log(R(i, i));
  }
  Y = qr.householderQ() * CMat::Identity(N, k);
  if (Rout) *Rout = std::move(R);
  return ld;
}

struct SideResult {
  CMat Y;
  cplx logdet{0.0, 0.0};
};

SideResult integrate_side(const EvansContext& ctx, Side side, cplx lambda, const CMat& V, cplx sigma) {
  constexpr int level = 4;  // RK4 step dx / 2
  const auto& T = ctx.table(level);
  const int K = ctx.profile().centre();
  const int M = ctx.profile().size();
  TableRK4 rk{T, lambda, sigma, ctx.dx() / level, {}, {}, {}, {}, {}};
  SideResult out;
  out.Y = V;
  if (V.cols() == 0) return out;
  const int qr_every = std::max(1, ctx.options().qr_interval);
  const int dir = side == Side::Plus ? -1 : 1;
  int j = side == Side::Plus ? level * (M - 1) : 0;
  const int j_end = level * K;
  int count = 0;
  while (j != j_end) {
    rk.step(j, dir, out.Y);
    j += 2 * dir;
    if (++count % qr_every == 0) out.logdet += orthonormalize(out.Y);
  }
  out.logdet += orthonormalize(out.Y);
  if (!out.Y.allFinite()) throw RelaxError(ErrorKind::Overflow, "evans: non-finite basis");
  return out;
}

std::pair<SideResult, SideResult> integrate_both(const EvansContext& ctx, cplx lambda, const CMat& Vp,
                                                 const CMat& Vm, cplx sp, cplx sm) {
  if (effective_threads(ctx.options().threads) > 1) {
    auto fut = std::async(std::launch::async, [&] { return integrate_side(ctx, Side::Plus, lambda, Vp, sp); });
    SideResult m = integrate_side(ctx, Side::Minus, lambda, Vm, sm);
    return {fut.get(), std::move(m)};
  }
  SideResult p = integrate_side(ctx, Side::Plus, lambda, Vp, sp);
  SideResult m = integrate_side(ctx, Side::Minus, lambda, Vm, sm);
  return {std::move(p), std::move(m)};
}

// Normalise B so that a fixed set of k rows is the identity. Pivot rows are the
// first rows within a factor 2 of the column maximum (stable under rounding).
CMat pivot_normalize(const CMat& B) {
  const auto N = B.rows(), k = B.cols();
  CMat W = B;
  std::vector<int> rows;
  std::vector<bool> used(N, false);
  for (Eigen::Index c = 0; c < k; ++c) {
    double mx = 0.0;
    for (Eigen::Index i = 0; i < N; ++i)
      if (!used[i]) mx = std::max(mx, std::abs(W(i, c)));
    int pick = -1;
    for (Eigen::Index i = 0; i < N && pick < 0; ++i)
      if (!used[i] && std::abs(W(i, c)) >= 0.5 * mx) pick = static_cast<int>(i);
    used[pick] = true;
    rows.push_back(pick);
    // eliminate this row from the remaining columns
    for (Eigen::Index c2 = c + 1; c2 < k; ++c2) W.col(c2) -= (W(pick, c2) / W(pick, c)) * W.col(c);
  }
  CMat sub(k, k);
  for (Eigen::Index a = 0; a < k; ++a) sub.row(a) = B.row(rows[a]);
  return B * sub.inverse();
}

struct ModeTrack {
  CVec mu;
  CMat V, Linv;
  std::vector<int> group;
  CMat P, R;

  void project() {
    const auto N = V.rows();
    CMat Vg(N, group.size()), Lg(group.size(), N);
    for (std::size_t a = 0; a < group.size(); ++a) {
      Vg.col(a) = V.col(group[a]);
      Lg.row(a) = Linv.row(group[a]);
    }
    P = Vg * Lg;
  }
  cplx sigma() const {
    cplx s = 0.0;
    for (int g : group) s += mu(g);
    return group.empty() ? cplx(0.0) : s / static_cast<double>(group.size());
  }
  CMat left_group() const {
    CMat Lg(group.size(), Linv.cols());
    for (std::size_t a = 0; a < group.size(); ++a) Lg.row(a) = Linv.row(group[a]);
    return Lg;
  }
};

double min_separation(const CVec& mu) {
  double sep = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    for (Eigen::Index j = i + 1; j < mu.size(); ++j) sep = std::min(sep, std::abs(mu(i) - mu(j)));
  return sep;
}

}  // namespace

// ---------------------------------------------------------------------------

CMat w_coefficient(const Mat& A, const Mat& Q, cplx lambda) {
  Eigen::FullPivLU<Mat> lu(A);
  if (!lu.isInvertible()) throw RelaxError(ErrorKind::Singular, "w_coefficient: A is singular");
  CMat QL = Q.cast<cplx>();
  QL.diagonal().array() -= lambda;
  return lu.inverse().cast<cplx>() * QL;
}

CMat coefficient_matrix(const ShockProfile& profile, cplx lambda, double x) {
  const int M = profile.size();
  auto at = [&](int k) { return point_coeffs(profile, profile.state(k), 0.0); };
  PointCoeffs pc;
  if (x <= profile.x.front() || x >= profile.x.back()) {
    pc = point_coeffs(profile, profile.state_at(x), 0.0);
  } else {
    const double t = (x - profile.x.front()) / profile.dx;
    const int k = std::min(static_cast<int>(t), M - 2);
    const double w = t - k;
    const auto a = at(k), b = at(k + 1);
    pc.Ai = (1 - w) * a.Ai + w * b.Ai;
    pc.QAi = (1 - w) * a.QAi + w * b.QAi;
  }
  return pc.QAi.cast<cplx>() - lambda * pc.Ai.cast<cplx>();
}

ModeExpansion mode_expansion(const RelaxationModel& model, const ShockData& shock, cplx lambda, Side side,
                             Regime regime) {
  const Vec u = endstate_u(shock, side);
  const Vec v = endstate_v(shock, side);
  const auto c = frame_jacobians(model, u, v, shock.s);
  const int N = model.dim();
  const auto eig = complex_eigen(w_coefficient(c.A, c.Q, lambda));

  std::vector<int> order(N);
  for (int i = 0; i < N; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto ma = eig.values(a), mb = eig.values(b);
    return ma.real() != mb.real() ? ma.real() < mb.real() : ma.imag() < mb.imag();
  });
  ModeExpansion me;
  me.lambda = lambda;
  me.side = side;
  me.regime = regime;
  me.mu.resize(N);
  me.V.resize(N, N);
  for (int i = 0; i < N; ++i) {
    me.mu(i) = eig.values(order[i]);
    me.V.col(i) = eig.right.col(order[i]);
    if (me.mu(i).real() < 0.0) ++me.k_stable;
  }
  const double sep = min_separation(me.mu);
  if (sep < 1e-10 * (1.0 + std::abs(lambda))) {
    throw RelaxError(ErrorKind::RootCoalescence, "mode_expansion: characteristic roots coalesce");
  }
  CMat QL = c.Q.cast<cplx>();
  QL.diagonal().array() -= lambda;
  for (int i = 0; i < N; ++i) {
    const CVec res = -me.mu(i) * (c.A.cast<cplx>() * me.V.col(i)) + QL * me.V.col(i);
    me.residual = std::max(me.residual, res.norm());
  }

  if (regime == Regime::HighFrequency) {
    const auto modes = hyperbolic_modes(c.A, c.Q);
    CVec pred(N);
    int idx = 0;
    for (int j = 0; j < modes.family_count(); ++j) {
      Eigen::ComplexEigenSolver<CMat> es(modes.eta[j].cast<cplx>(), false);
      for (Eigen::Index m = 0; m < es.eigenvalues().size(); ++m) {
        pred(idx++) = -lambda / modes.speed[j] - es.eigenvalues()(m) / modes.speed[j];
      }
    }
    me.predicted = match_branches(me.mu, pred);
  } else if (regime == Regime::LowFrequency) {
    const auto eq = equilibrium_data(model, u);
    const auto ce = chapman_enskog(model, u);
    const Mat fast = reduced_traveling_wave_matrix(model, u, v, shock.s);
    CVec pred(N);
    std::vector<bool> is_slow(N, false);
    for (int j = 0; j < model.n; ++j) {
      const double as = eq.speeds(j) - shock.s;
      pred(j) = -lambda / as + lambda * lambda * ce.beta_diag(j) / (as * as * as);
      is_slow[j] = true;
    }
    Eigen::ComplexEigenSolver<CMat> es(fast.cast<cplx>(), false);
    for (int j = 0; j < model.r; ++j) pred(model.n + j) = es.eigenvalues()(j);
    const auto perm = match_permutation(me.mu, pred);
    me.predicted.resize(N);
    for (int i = 0; i < N; ++i) {
      me.predicted(i) = pred(perm[i]);
      if (is_slow[perm[i]]) me.slow_index.push_back(i);
    }
  }
  return me;
}

// ---------------------------------------------------------------------------

EvansContext::EvansContext(const ShockProfile& profile, EvansOptions opts)
    : profile_(std::make_shared<const ShockProfile>(profile)), opts_(opts), N_(profile.dim()) {
  const auto m = point_coeffs(*profile_, profile_->endstate(Side::Minus), opts_.spectral_shift);
  const auto p = point_coeffs(*profile_, profile_->endstate(Side::Plus), opts_.spectral_shift);
  Ai_m_ = m.Ai;
  QAi_m_ = m.QAi;
  Ai_p_ = p.Ai;
  QAi_p_ = p.QAi;
  A_m_ = m.Ai.inverse();
  A_p_ = p.Ai.inverse();
}

CMat EvansContext::limit_matrix(Side side, cplx lambda) const {
  const Mat& Ai = side == Side::Minus ? Ai_m_ : Ai_p_;
  const Mat& QAi = side == Side::Minus ? QAi_m_ : QAi_p_;
  return QAi.cast<cplx>() - lambda * Ai.cast<cplx>();
}

const EvansContext::Table& EvansContext::table(int level) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = tables_.find(level);
  if (it != tables_.end()) return *it->second;
  auto t = std::make_unique<Table>();
  t->level = level;
  t->N = N_;
  const auto& p = *profile_;
  const int count = level * (p.size() - 1) + 1;
  t->Ai.resize(static_cast<std::size_t>(count) * N_ * N_);
  t->QAi.resize(t->Ai.size());
  for (int j = 0; j < count; ++j) {
    const double x = -p.X + j * p.dx / level;
    // grid points use the stored states exactly
    const auto pc = (j % level == 0) ? point_coeffs(p, p.state(j / level), opts_.spectral_shift)
                                     : point_coeffs_at(p, x, opts_.spectral_shift);
    std::copy(pc.Ai.data(), pc.Ai.data() + N_ * N_, t->Ai.data() + static_cast<std::size_t>(j) * N_ * N_);
    std::copy(pc.QAi.data(), pc.QAi.data() + N_ * N_, t->QAi.data() + static_cast<std::size_t>(j) * N_ * N_);
  }
  auto& ref = *t;
  tables_.emplace(level, std::move(t));
  return ref;
}

CMat ModeSelection::basis() const {
  CMat B(V.rows(), group.size());
  for (std::size_t a = 0; a < group.size(); ++a) B.col(a) = V.col(group[a]);
  return B;
}

CMat ModeSelection::projector() const {
  CMat L(group.size(), Linv.cols());
  for (std::size_t a = 0; a < group.size(); ++a) L.row(a) = Linv.row(group[a]);
  return basis() * L;
}

cplx ModeSelection::sigma() const {
  cplx s = 0.0;
  for (int g : group) s += mu(g);
  return group.empty() ? cplx(0.0) : s / static_cast<double>(group.size());
}

ModeSelection select_modes(const EvansContext& ctx, Side side, cplx lambda) {
  const auto eig = complex_eigen(ctx.limit_matrix(side, lambda));
  ModeSelection sel;
  sel.mu = eig.values;
  sel.V = eig.right;
  sel.Linv = eig.left;
  const auto N = sel.mu.size();
  const double tol = 1e-9 * (1.0 + std::abs(lambda));
  auto wanted = [&](cplx m) { return side == Side::Plus ? m.real() < 0.0 : m.real() > 0.0; };
  bool boundary = false;
  for (Eigen::Index i = 0; i < N; ++i) boundary = boundary || std::abs(sel.mu(i).real()) <= tol;
  if (!boundary) {
    for (Eigen::Index i = 0; i < N; ++i)
      if (wanted(sel.mu(i))) sel.group.push_back(static_cast<int>(i));
    return sel;
  }
  // on the boundary of the splitting region: follow the roots from lambda + delta
  for (double delta = 1e-6 * (1.0 + std::abs(lambda)); delta < 1e-1; delta *= 10.0) {
    const auto e2 = complex_eigen(ctx.limit_matrix(side, lambda + delta));
    bool clean = true;
    for (Eigen::Index i = 0; i < N; ++i) clean = clean && std::abs(e2.values(i).real()) > 1e-3 * delta;
    if (!clean) continue;
    const auto perm = match_permutation(sel.mu, e2.values);
    for (Eigen::Index i = 0; i < N; ++i)
      if (wanted(e2.values(perm[i]))) sel.group.push_back(static_cast<int>(i));
    return sel;
  }
  throw RelaxError(ErrorKind::OutsideSplitting, "select_modes: no consistent splitting near lambda");
}

EvansValue evans_with_bases(const EvansContext& ctx, cplx lambda, const CMat& V_plus, const CMat& V_minus,
                            cplx sigma_plus, cplx sigma_minus) {
  const int N = ctx.dim();
  if (V_plus.cols() + V_minus.cols() != N || V_plus.rows() != N || V_minus.rows() != N) {
    throw RelaxError(ErrorKind::OutsideSplitting, "evans: basis dimensions do not add up to N");
  }
  auto [p, m] = integrate_both(ctx, lambda, V_plus, V_minus, sigma_plus, sigma_minus);
  CMat D(N, N);
  D << p.Y, m.Y;
  const cplx det = D.partialPivLu().determinant();
  EvansValue ev;
  ev.lambda = lambda;
  ev.k_stable = static_cast<int>(V_plus.cols());
  ev.log_scale_plus = p.logdet.real();
  ev.log_scale_minus = m.logdet.real();
  const double mag = std::max(std::abs(det), 1e-300);
  ev.log_abs = std::log(mag) + p.logdet.real() + m.logdet.real();
  ev.arg = std::arg(det) + p.logdet.imag() + m.logdet.imag();
  return ev;
}

namespace {

struct SplitBases {
  ModeSelection plus, minus;
};

SplitBases split_bases(const EvansContext& ctx, cplx lambda) {
  SplitBases sb{select_modes(ctx, Side::Plus, lambda), select_modes(ctx, Side::Minus, lambda)};
  if (static_cast<int>(sb.plus.group.size() + sb.minus.group.size()) != ctx.dim()) {
    throw RelaxError(ErrorKind::OutsideSplitting,
                     "evans: lambda outside the consistent-splitting region (stable + unstable != N)");
  }
  return sb;
}

}  // namespace

EvansValue evans_value(const EvansContext& ctx, cplx lambda) {
  const auto sb = split_bases(ctx, lambda);
  return evans_with_bases(ctx, lambda, pivot_normalize(sb.plus.basis()), pivot_normalize(sb.minus.basis()),
                          sb.plus.sigma(), sb.minus.sigma());
}

std::vector<EvansValue> evans_batch(const EvansContext& ctx, const std::vector<cplx>& lambdas, int threads) {
  std::vector<EvansValue> out(lambdas.size());
  const int T = std::min<int>(effective_threads(threads), static_cast<int>(std::max<std::size_t>(1, lambdas.size())));
  if (T <= 1) {
    for (std::size_t i = 0; i < lambdas.size(); ++i) out[i] = evans_value(ctx, lambdas[i]);
    return out;
  }
  // warm the coefficient table before fanning out
  ctx.table(4);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(T);
  std::vector<std::thread> pool;
  for (int t = 0; t < T; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < lambdas.size(); i = next++) out[i] = evans_value(ctx, lambdas[i]);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// ---------------------------------------------------------------------------
// Contours

double contour_length(const ContourSpec& spec) {
  if (spec.kind == ContourSpec::Kind::Circle) return 2.0 * kPi * spec.r0;
  const double b = std::sqrt(spec.R * spec.R - spec.eta1 * spec.eta1);
  const double th = std::atan2(b, -spec.eta1);
  return 2.0 * spec.R * th + 2.0 * b;
}

cplx contour_point(const ContourSpec& spec, double s) {
  const cplx c(spec.centre_re, spec.centre_im);
  if (spec.kind == ContourSpec::Kind::Circle) return c + std::polar(spec.r0, s / spec.r0);
  const double b = std::sqrt(spec.R * spec.R - spec.eta1 * spec.eta1);
  const double th = std::atan2(b, -spec.eta1);
  const double s1 = spec.R * th, s2 = s1 + 2.0 * b;
  if (s <= s1) return c + std::polar(spec.R, s / spec.R);
  if (s <= s2) return c + cplx(-spec.eta1, b - (s - s1));
  return c + std::polar(spec.R, -th + (s - s2) / spec.R);
}

ContourReport evans_on_contour(const EvansContext& ctx, const ContourSpec& spec, const ContourOptions& opts) {
  ContourReport rep;
  rep.spec = spec;
  const int N = ctx.dim();
  const double length = contour_length(spec);
  const double hmax = opts.max_step > 0.0 ? opts.max_step : length / 200.0;
  int evaluations = 0;

  auto decompose = [&](Side side, cplx lambda) {
    const auto e = complex_eigen(ctx.limit_matrix(side, lambda));
    ModeTrack t;
    t.mu = e.values;
    t.V = e.right;
    t.Linv = e.left;
    return t;
  };
  auto stable_count = [](const ModeTrack& t) {
    int k = 0;
    for (Eigen::Index i = 0; i < t.mu.size(); ++i) k += t.mu(i).real() < 0.0;
    return k;
  };

  try {
    const cplx l0 = contour_point(spec, 0.0);
    ModeTrack tp = decompose(Side::Plus, l0), tm = decompose(Side::Minus, l0);
    const double tol = 1e-8 * (1.0 + std::abs(l0));
    for (int i = 0; i < N; ++i) {
      if (std::abs(tp.mu(i).real()) <= tol || std::abs(tm.mu(i).real()) <= tol) {
        throw RelaxError(ErrorKind::OutsideSplitting, "contour start point is on the splitting boundary");
      }
      if (tp.mu(i).real() < 0.0) tp.group.push_back(i);
      if (tm.mu(i).real() > 0.0) tm.group.push_back(i);
    }
    if (static_cast<int>(tp.group.size() + tm.group.size()) != N) {
      throw RelaxError(ErrorKind::OutsideSplitting, "contour start point outside the consistent-splitting region");
    }
    for (ModeTrack* t : {&tp, &tm}) {
      t->project();
      t->R = CMat(N, t->group.size());
      for (std::size_t a = 0; a < t->group.size(); ++a) t->R.col(a) = t->V.col(t->group[a]);
    }
    const ModeTrack start_p = tp, start_m = tm;

    EvansValue cur = evans_with_bases(ctx, l0, tp.R, tm.R, tp.sigma(), tm.sigma());
    ++evaluations;
    double unwound = cur.arg;
    rep.samples.push_back({l0, cur.log_abs, unwound, stable_count(tp)});
    rep.min_abs_log = cur.log_abs;

    double s = 0.0, h = hmax;
    while (s < length) {
      const bool last = s + h >= length;
      const double s_next = last ? length : s + h;
      const cplx ln = last ? l0 : contour_point(spec, s_next);
      bool ok = true;
      ModeTrack np, nm;
      for (auto [side, prev, next] : {std::tuple{Side::Plus, &tp, &np}, std::tuple{Side::Minus, &tm, &nm}}) {
        ModeTrack d = decompose(side, ln);
        const auto perm = match_permutation(prev->mu, d.mu);
        next->mu.resize(N);
        next->V.resize(N, N);
        next->Linv.resize(N, N);
        double disp = 0.0;
        for (int i = 0; i < N; ++i) {
          next->mu(i) = d.mu(perm[i]);
          next->V.col(i) = d.V.col(perm[i]);
          next->Linv.row(i) = d.Linv.row(perm[i]);
          disp = std::max(disp, std::abs(next->mu(i) - prev->mu(i)));
        }
        next->group = prev->group;
        next->project();
        const double pn = std::max(1.0, prev->P.norm());
        const CMat dP = next->P - prev->P;
        if (disp > 0.3 * min_separation(next->mu) || dP.norm() > 0.2 * pn) {
          ok = false;
          break;
        }
        const CMat I = CMat::Identity(N, N);
        next->R = next->P * (I + 0.5 * dP * dP) * prev->R;
      }
      EvansValue nv;
      if (ok) {
        nv = evans_with_bases(ctx, ln, np.R, nm.R, np.sigma(), nm.sigma());
        if (++evaluations > opts.sample_budget) {
          throw RelaxError(ErrorKind::SampleBudget, "contour: sample budget exceeded");
        }
        const cplx ratio = std::exp(cplx(nv.log_abs - cur.log_abs, nv.arg - cur.arg));
        const double darg = std::abs(wrap_arg(nv.arg - cur.arg));
        if (std::abs(ratio - 1.0) > opts.rel_change || darg >= opts.max_arg_step) ok = false;
        if (ok) rep.max_rel_change = std::max(rep.max_rel_change, std::abs(ratio - 1.0));
      }
      if (!ok) {
        ++rep.rejected_steps;
        h *= 0.5;
        if (h < opts.min_step) throw RelaxError(ErrorKind::NonConvergence, "contour: step size underflow");
        continue;
      }
      const double dA = wrap_arg(nv.arg - cur.arg);
      unwound += dA;
      rep.total_arg += dA;
      cur = nv;
      tp = std::move(np);
      tm = std::move(nm);
      s = s_next;
      rep.samples.push_back({ln, cur.log_abs, unwound, stable_count(tp)});
      rep.min_abs_log = std::min(rep.min_abs_log, cur.log_abs);
      h = std::min(2.0 * h, hmax);
    }

    // closure: the tracked roots must come back to their own labels
    for (auto [t, s0] : {std::pair{&tp, &start_p}, std::pair{&tm, &start_m}}) {
      for (int i = 0; i < N; ++i) {
        if (std::abs(t->mu(i) - s0->mu(i)) > 1e-6 * (1.0 + std::abs(s0->mu(i)))) {
          throw RelaxError(ErrorKind::BranchError, "contour: root labels permuted after one loop (branch point inside)");
        }
      }
    }
    const CMat Cp = start_p.left_group() * tp.R;
    const CMat Cm = start_m.left_group() * tm.R;
    rep.holonomy_arg = std::arg(Cp.determinant() * Cm.determinant());
    rep.winding_real = (rep.total_arg - rep.holonomy_arg) / (2.0 * kPi);
    rep.winding = static_cast<int>(std::lround(rep.winding_real));
    rep.closed_ok = std::abs(rep.winding_real - rep.winding) <= 1e-6;
    if (!rep.closed_ok) rep.error = "contour: accumulated argument is not a multiple of 2 pi";
  } catch (const RelaxError& e) {
    rep.closed_ok = false;
    rep.error = e.what();
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Liu–Majda

double liu_majda_determinant(const Mat& out_minus, const Mat& out_plus, const Mat& masses) {
  const auto n = out_minus.rows();
  if (out_plus.rows() != n || masses.rows() != n || out_minus.cols() + out_plus.cols() + masses.cols() != n) {
    throw RelaxError(ErrorKind::IndexMismatch, "liu_majda: column count differs from n");
  }
  Mat D(n, n);
  D << out_minus, out_plus, masses;
  return D.determinant();
}

DeltaResult liu_majda_delta(const RelaxationModel& model, const ShockData& shock, const ShockProfile* profile) {
  DeltaResult r;
  const int n = model.n;
  if ((shock.u_minus - shock.u_plus).norm() <= 1e-14 * (1.0 + shock.u_minus.norm())) {
    r.degenerate = true;
    r.mass = Vec::Zero(n);
    r.matrix = Mat::Zero(n, n);
    return r;
  }
  const auto em = equilibrium_data(model, shock.u_minus);
  const auto ep = equilibrium_data(model, shock.u_plus);
  std::vector<Vec> cols;
  for (int j = 0; j < n; ++j)
    if (em.speeds(j) - shock.s < 0.0) cols.push_back(em.right.col(j));
  r.outgoing_minus = static_cast<int>(cols.size());
  for (int j = 0; j < n; ++j)
    if (ep.speeds(j) - shock.s > 0.0) cols.push_back(ep.right.col(j));
  r.outgoing_plus = static_cast<int>(cols.size()) - r.outgoing_minus;
  const int ell = n - static_cast<int>(cols.size());
  if (ell < 1) throw RelaxError(ErrorKind::IndexMismatch, "liu_majda: too many outgoing families for a Lax shock");
  if (ell > 1) throw RelaxError(ErrorKind::Unsupported, "liu_majda: overcompressive shocks (ell > 1) need several mass columns");

  if (profile && !profile->constant_state) {
    // m_1 = int -ubar' dx by the trapezoid rule
    r.mass = Vec::Zero(n);
    const int M = profile->size();
    for (int k = 0; k < M; ++k) {
      const double w = (k == 0 || k == M - 1) ? 0.5 * profile->dx : profile->dx;
      r.mass -= w * profile->du.col(k);
    }
  } else {
    r.mass = shock.u_minus - shock.u_plus;
  }
  cols.push_back(r.mass);
  r.matrix.resize(n, n);
  for (int j = 0; j < n; ++j) r.matrix.col(j) = cols[j];
  r.delta = r.matrix.determinant();
  r.degenerate = std::abs(r.delta) <= 1e-10 * std::max(1.0, r.matrix.norm());
  return r;
}

// ---------------------------------------------------------------------------
// Verdict

const char* to_string(Tri t) {
  switch (t) {
    case Tri::Pass: return "PASS";
    case Tri::Fail: return "FAIL";
    default: return "UNKNOWN";
  }
}

double default_contour_radius(const RelaxationModel& model, const ShockData& shock) {
  double eta = 0.0, a = 0.0;
  for (Side side : {Side::Minus, Side::Plus}) {
    const auto m = hyperbolic_modes(model, endstate_u(shock, side), endstate_v(shock, side), shock.s);
    for (int j = 0; j < m.family_count(); ++j) {
      a = std::max(a, std::abs(m.speed[j]));
      Eigen::EigenSolver<Mat> es(m.eta[j], false);
      eta = std::max(eta, es.eigenvalues().real().maxCoeff());
    }
  }
  return 10.0 * (1.0 + eta + a);
}

namespace {

// max over real xi of Re sigma(-i xi A + Q) at both endstates (with the shift).
double essential_growth(const EvansContext& ctx) {
  double g = -std::numeric_limits<double>::infinity();
  std::vector<double> xis = logspace(1e-3, 1e3, 241);
  xis.insert(xis.begin(), 0.0);
  for (Side side : {Side::Minus, Side::Plus}) {
    const Mat& A = ctx.A_limit(side);
    const Mat Q = ctx.limit_matrix(side, 0.0).real() * A;
    for (double xi : xis) {
      for (double sgn : {1.0, -1.0}) {
        const CMat S = cplx(0.0, -sgn * xi) * A.cast<cplx>() + Q.cast<cplx>();
        Eigen::ComplexEigenSolver<CMat> es(S, false);
        g = std::max(g, es.eigenvalues().real().maxCoeff());
      }
    }
  }
  return g;
}

}  // namespace

StabilityVerdict stability_verdict(const EvansContext& ctx, const VerdictSettings& settings) {
  StabilityVerdict v;
  const auto& prof = ctx.profile();
  v.ell = prof.classification.ell;

  bool delta_ok = false;
  try {
    const auto d = liu_majda_delta(prof.model, prof.shock, &prof);
    v.delta = d.delta;
    delta_ok = !d.degenerate;
    if (d.degenerate) v.notes.push_back("Liu-Majda determinant vanishes");
  } catch (const RelaxError& e) {
    v.notes.push_back(std::string("Liu-Majda determinant: ") + e.what());
  }

  const double growth = essential_growth(ctx);
  const bool essential_unstable = growth > 1e-8;
  if (essential_unstable) v.notes.push_back("essential spectrum reaches Re lambda > 0");

  ContourSpec outer = settings.outer;
  outer.kind = ContourSpec::Kind::Outer;
  ContourSpec circle;
  circle.kind = ContourSpec::Kind::Circle;
  circle.r0 = settings.r0;
  // with unstable essential spectrum the outer winding is meaningless (the
  // contour crosses it and encloses branch points), so it is not attempted
  if (essential_unstable) {
    v.outer_report.spec = outer;
    v.outer_report.error = "skipped: essential spectrum in Re lambda > 0";
  } else {
    v.outer_report = evans_on_contour(ctx, outer, settings.contour);
  }
  v.circle_report = evans_on_contour(ctx, circle, settings.contour);
  const bool outer_ok = v.outer_report.closed_ok, circle_ok = v.circle_report.closed_ok;
  if (!outer_ok) v.notes.push_back("outer contour: " + v.outer_report.error);
  if (!circle_ok) v.notes.push_back("origin circle: " + v.circle_report.error);
  v.winding_outer = v.outer_report.winding;
  v.winding_origin = v.circle_report.winding;
  v.winding_big = v.winding_outer - v.winding_origin;

  if (essential_unstable) {
    v.D1 = Tri::Fail;
  } else if (!outer_ok || !circle_ok) {
    v.D1 = Tri::Unknown;
  } else {
    v.D1 = (v.winding_big == 0 && v.winding_origin == v.ell) ? Tri::Pass : Tri::Fail;
  }

  if (!delta_ok) {
    v.D2 = Tri::Fail;
  } else if (!circle_ok) {
    v.D2 = Tri::Unknown;
  } else {
    v.D2 = v.winding_origin == v.ell ? Tri::Pass : Tri::Fail;
  }

  if (v.D1 == Tri::Fail || v.D2 == Tri::Fail) v.script_D = Tri::Fail;
  else if (v.D1 == Tri::Pass && v.D2 == Tri::Pass) v.script_D = Tri::Pass;
  else v.script_D = Tri::Unknown;
  return v;
}

// ---------------------------------------------------------------------------
// Resolvent

ResolventBases resolvent_bases(const EvansContext& ctx, cplx lambda) {
  const auto sb = split_bases(ctx, lambda);
  const auto& prof = ctx.profile();
  const int N = ctx.dim();
  const int M = prof.size();
  const double dx = prof.dx;

  // substeps keep |mu_i - sigma| h <= 1/2 for the shifted limiting roots
  double spread = 0.0;
  for (const auto* sel : {&sb.plus, &sb.minus}) {
    const cplx sg = sel->sigma();
    for (Eigen::Index i = 0; i < sel->mu.size(); ++i) spread = std::max(spread, std::abs(sel->mu(i) - sg));
  }
  int sub = 1;
  while (sub < 4096 && spread * dx / sub > 0.5) sub *= 2;
  const int level = 2 * sub;
  const auto& T = ctx.table(level);

  ResolventBases b;
  b.lambda = lambda;
  b.N = N;
  b.k = static_cast<int>(sb.plus.group.size());
  b.M = M;
  b.x = prof.x;
  b.Qp.resize(M);
  b.Qm.resize(M);
  b.Rp.resize(M);
  b.Rm.resize(M);
  b.Rp_inv.resize(M);
  b.Rm_inv.resize(M);
  b.Phi_inv.resize(M);
  b.Ai.resize(M);

  auto run = [&](Side side) {
    const ModeSelection& sel = side == Side::Plus ? sb.plus : sb.minus;
    const cplx sigma = sel.sigma();
    TableRK4 rk{T, lambda, sigma, dx / level, {}, {}, {}, {}, {}};
    auto& Qs = side == Side::Plus ? b.Qp : b.Qm;
    auto& Rs = side == Side::Plus ? b.Rp : b.Rm;
    auto& Rinv = side == Side::Plus ? b.Rp_inv : b.Rm_inv;
    CMat Y = sel.basis();
    const int first = side == Side::Plus ? M - 1 : 0;
    const int dir = side == Side::Plus ? -1 : 1;
    orthonormalize(Y);
    Qs[first] = Y;
    // plus side runs backward: Z(x_j) = e^{-sigma dx} Y; minus side e^{+sigma dx} Y
    const cplx factor = side == Side::Plus ? std::exp(-sigma * dx) : std::exp(sigma * dx);
    for (int j = first + dir; j >= 0 && j < M; j += dir) {
      int t = level * (j - dir);
      for (int q = 0; q < sub; ++q, t += 2 * dir) rk.step(t, dir, Y);
      CMat R;
      orthonormalize(Y, &R);
      Qs[j] = Y;
      Rs[j] = factor * R;
      Rinv[j] = Rs[j].inverse();
    }
  };
  if (effective_threads(ctx.options().threads) > 1) {
    auto fut = std::async(std::launch::async, [&] { run(Side::Plus); });
    run(Side::Minus);
    fut.get();
  } else {
    run(Side::Plus);
    run(Side::Minus);
  }

  b.min_rcond = std::numeric_limits<double>::infinity();
  for (int j = 0; j < M; ++j) {
    CMat P(N, N);
    P << b.Qp[j], b.Qm[j];
    b.Phi_inv[j] = P.inverse();
    b.Ai[j] = T.ai(level * j);
  }
  for (int j : {0, prof.centre(), M - 1}) {
    CMat P(N, N);
    P << b.Qp[j], b.Qm[j];
    Eigen::JacobiSVD<CMat> svd(P);
    const auto& sv = svd.singularValues();
    b.min_rcond = std::min(b.min_rcond, sv(sv.size() - 1) / sv(0));
  }
  if (b.min_rcond < 1e-8) {
    throw RelaxError(ErrorKind::Singular, "resolvent: decaying bases nearly dependent (lambda near an eigenvalue)");
  }
  return b;
}

CMat resolvent_kernel(const ResolventBases& b, int i, int j, bool upper) {
  if (i < 0 || j < 0 || i >= b.M || j >= b.M) throw RelaxError(ErrorKind::InvalidInput, "resolvent_kernel: index out of range");
  const int k = b.k, N = b.N;
  if (i > j || (i == j && upper)) {
    CMat K = CMat::Identity(k, k);
    for (int m = j; m < i; ++m) K = b.Rp_inv[m] * K;
    return -b.Ai[i] * b.Qp[i] * K * b.Phi_inv[j].topRows(k);
  }
  CMat K = CMat::Identity(N - k, N - k);
  for (int m = j; m > i; --m) K = b.Rm_inv[m] * K;
  return b.Ai[i] * b.Qm[i] * K * b.Phi_inv[j].bottomRows(N - k);
}

CMat resolvent_kernel(const EvansContext& ctx, cplx lambda, double x, double y) {
  const auto b = resolvent_bases(ctx, lambda);
  const auto& p = ctx.profile();
  auto idx = [&](double z) {
    return std::clamp(static_cast<int>(std::lround((z + p.X) / p.dx)), 0, p.size() - 1);
  };
  return resolvent_kernel(b, idx(x), idx(y), x >= y);
}

CMat resolvent_apply(const ResolventBases& b, const CMat& f) {
  const int N = b.N, k = b.k, M = b.M;
  if (f.rows() != N || f.cols() != M) throw RelaxError(ErrorKind::InvalidInput, "resolvent_apply: f must be N x M");
  const double dx = b.x.size() > 1 ? b.x[1] - b.x[0] : 1.0;
  std::vector<CVec> gp(M), gm(M);
  for (int j = 0; j < M; ++j) {
    const double w = (j == 0 || j == M - 1) ? 0.5 * dx : dx;
    const CVec c = b.Phi_inv[j] * f.col(j) * w;
    gp[j] = c.head(k);
    gm[j] = c.tail(N - k);
  }
  CMat out(N, M);
  CVec P = CVec::Zero(k);
  for (int i = 0; i < M; ++i) {
    out.col(i) = -b.Qp[i] * (P + 0.5 * gp[i]);
    if (i + 1 < M) P = b.Rp_inv[i] * (P + gp[i]);
  }
  CVec Pm = CVec::Zero(N - k);
  for (int i = M - 1; i >= 0; --i) {
    out.col(i) += b.Qm[i] * (Pm + 0.5 * gm[i]);
    if (i > 0) Pm = b.Rm_inv[i] * (Pm + gm[i]);
  }
  for (int i = 0; i < M; ++i) out.col(i) = b.Ai[i] * out.col(i);
  return out;
}

// ---------------------------------------------------------------------------
// Adjoint

CMat adjoint_coefficient(const ShockProfile& profile, cplx lambda, double x) {
  const auto pc = point_coeffs_at(profile, x, 0.0);
  const CMat Nm = pc.QAi.cast<cplx>() - lambda * pc.Ai.cast<cplx>();
  return -Nm.adjoint();
}

AdjointBasis adjoint_basis(const EvansContext& ctx, cplx lambda, double L) {
  const auto sb = split_bases(ctx, lambda);
  auto [p, m] = integrate_both(ctx, lambda, pivot_normalize(sb.plus.basis()), pivot_normalize(sb.minus.basis()),
                               sb.plus.sigma(), sb.minus.sigma());
  const auto& prof = ctx.profile();
  const int N = ctx.dim();
  CMat Z0(N, N);
  Z0 << p.Y, m.Y;
  const CMat Wt0 = Z0.inverse().adjoint();

  const int K = prof.centre();
  const int half = std::min(K, static_cast<int>(std::floor(L / prof.dx + 1e-9)));
  const int count = 2 * half + 1;
  AdjointBasis ab;
  ab.lambda = lambda;
  ab.centre = half;
  ab.x.resize(count);
  std::vector<CMat> Z(count);
  ab.W_tilde.resize(count);
  ab.W.resize(count);
  Z[half] = Z0;
  ab.W_tilde[half] = Wt0;

  // fourth-order Magnus steps; the adjoint step is the inverse-adjoint of the
  // forward one, so the pairing is conserved to rounding
  const double shift = ctx.options().spectral_shift;
  auto Nx = [&](double x) {
    const auto pc = point_coeffs_at(prof, x, shift);
    return CMat(pc.QAi.cast<cplx>() - lambda * pc.Ai.cast<cplx>());
  };
  const double g = std::sqrt(3.0) / 6.0;
  for (int dir : {1, -1}) {
    for (int s = 0; s < half; ++s) {
      const int from = half + dir * s, to = from + dir;
      const double x0 = prof.x[K + from - half];
      const double h = dir * prof.dx;
      const CMat N1 = Nx(x0 + h * (0.5 - g)), N2 = Nx(x0 + h * (0.5 + g));
      const CMat Om = 0.5 * h * (N1 + N2) + (std::sqrt(3.0) / 12.0) * h * h * (N2 * N1 - N1 * N2);
      const CMat E = Om.exp();
      const CMat Einv = (-Om).exp();
      Z[to] = E * Z[from];
      ab.W_tilde[to] = Einv.adjoint() * ab.W_tilde[from];
    }
  }
  double drift = 0.0;
  const CMat pair0 = ab.W_tilde[half].adjoint() * Z[half];
  for (int i = 0; i < count; ++i) {
    ab.x[i] = prof.x[K - half + i];
    ab.W[i] = point_coeffs(prof, prof.state(K - half + i), shift).Ai * Z[i];
    const CMat pair = ab.W_tilde[i].adjoint() * Z[i];
    for (int c = 0; c < N; ++c) {
      drift = std::max(drift, std::abs(pair(c, c) - pair0(c, c)) / std::max(std::abs(pair0(c, c)), 1e-300));
    }
  }
  ab.pairing_drift = drift;
  return ab;
}

}  // namespace relax

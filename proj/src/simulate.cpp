#include "relax/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace relax {

namespace {

double profile_max_speed(const ShockProfile& p) {
  double a = 0.0;
  const int stride = std::max(1, p.size() / 256);
  auto visit = [&](const Vec& w) {
    const auto c = frame_jacobians(p.model, w.head(p.model.n), w.tail(p.model.r), p.shock.s);
    a = std::max(a, real_eigen(c.A).values.cwiseAbs().maxCoeff());
  };
  for (int k = 0; k < p.size(); k += stride) visit(p.state(k));
  visit(p.endstate(Side::Minus));
  visit(p.endstate(Side::Plus));
  return a;
}

// Grid-aligned characteristic shifts for a constant principal part.
struct ExactTransport {
  Mat R, L;
  std::vector<int> shift;  // cells per step, per eigen-direction
  Vec w_left, w_right;     // inflow values of the characteristic variables

  void apply(Mat& W) const {
    const int N = static_cast<int>(W.rows()), M = static_cast<int>(W.cols());
    Mat w = L * W;
    for (int j = 0; j < N; ++j) {
      const int m = shift[j];
      if (m > 0) {
        for (int i = M - 1; i >= m; --i) w(j, i) = w(j, i - m);
        for (int i = 0; i < std::min(m, M); ++i) w(j, i) = w_left(j);
      } else if (m < 0) {
        for (int i = 0; i < M + m; ++i) w(j, i) = w(j, i - m);
        for (int i = std::max(0, M + m); i < M; ++i) w(j, i) = w_right(j);
      }
    }
    W.noalias() = R * w;
  }
};

bool try_exact(const Mat& A, double dx, ExactTransport& tr, double& dt, double& amax) {
  const auto eig = real_eigen(A);
  amax = eig.values.cwiseAbs().maxCoeff();
  if (amax <= 0.0) return false;
  dt = dx / amax;
  tr.R = eig.right;
  tr.L = eig.left;
  tr.shift.clear();
  for (int j = 0; j < eig.values.size(); ++j) {
    const double m = eig.values(j) * dt / dx;
    if (std::abs(m - std::round(m)) > 1e-9) return false;
    tr.shift.push_back(static_cast<int>(std::round(m)));
  }
  return true;
}

// local Lax-Friedrichs step for U_t + F(U)_x = 0 with ghost states at the edges
template <class Flux>
void rusanov_step(Mat& U, double dt, double dx, double alpha, const Vec& ghost_l, const Vec& ghost_r, Flux&& flux) {
  const int N = static_cast<int>(U.rows()), M = static_cast<int>(U.cols());
  Mat F(N, M);
  for (int i = 0; i < M; ++i) F.col(i) = flux(i, U.col(i));
  const Vec Fl = flux(-1, ghost_l), Fr = flux(M, ghost_r);
  Mat G(N, M + 1);  // interface fluxes i - 1/2
  for (int i = 0; i <= M; ++i) {
    const Vec ul = i == 0 ? ghost_l : Vec(U.col(i - 1));
    const Vec ur = i == M ? ghost_r : Vec(U.col(i));
    const Vec fl = i == 0 ? Fl : Vec(F.col(i - 1));
    const Vec fr = i == M ? Fr : Vec(F.col(i));
    G.col(i) = 0.5 * (fl + fr) - 0.5 * alpha * (ur - ul);
  }
  for (int i = 0; i < M; ++i) U.col(i) -= dt / dx * (G.col(i + 1) - G.col(i));
}

void record(SimRun& run, const Mat& U, const Mat* background, double t, int n, bool keep) {
  const int M = static_cast<int>(U.cols());
  NormSample s;
  s.t = t;
  Vec mass = Vec::Zero(n);
  int lo = -1, hi = -1;
  for (int i = 0; i < M; ++i) {
    const double a = background ? (U.col(i) - background->col(i)).norm() : U.col(i).norm();
    s.L1 += run.dx * a;
    s.L2 += run.dx * a * a;
    s.Linf = std::max(s.Linf, a);
    mass += run.dx * U.col(i).head(n);
    if (a > 0.0) {
      if (lo < 0) lo = i;
      hi = i;
    }
  }
  s.L2 = std::sqrt(s.L2);
  s.u_mass = mass(0);
  s.support_lo = lo >= 0 ? run.x[lo] : std::numeric_limits<double>::quiet_NaN();
  s.support_hi = hi >= 0 ? run.x[hi] : std::numeric_limits<double>::quiet_NaN();
  if (run.trace.empty()) run.mass0 = mass;
  run.mass_drift = std::max(run.mass_drift, (mass - run.mass0).norm() / (1.0 + run.mass0.norm()));
  run.trace.push_back(s);
  run.times.push_back(t);
  if (keep) run.snapshots.push_back(U);
}

std::vector<int> snapshot_steps(const std::vector<double>& times, double dt, int nsteps) {
  std::vector<int> out;
  for (double t : times) {
    const int k = static_cast<int>(std::lround(t / dt));
    if (k >= 0 && k <= nsteps) out.push_back(k);
  }
  out.push_back(nsteps);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

template <class Stepper>
void run_loop(SimRun& run, Mat& U, double T, const SimOptions& opts, const Mat* background, int n, Stepper&& step) {
  // T is rounded to a whole number of steps
  const int nsteps = static_cast<int>(std::lround(T / run.dt));
  auto steps = snapshot_steps(opts.snapshot_times, run.dt, nsteps);
  std::size_t next = 0;
  if (steps[next] == 0) {
    record(run, U, background, 0.0, n, opts.keep_snapshots);
    ++next;
  }
  for (int k = 1; k <= nsteps; ++k) {
    step(U);
    if (!U.allFinite()) throw RelaxError(ErrorKind::NonFinite, "simulation blew up at t = " + std::to_string(k * run.dt));
    if (next < steps.size() && steps[next] == k) {
      record(run, U, background, k * run.dt, n, opts.keep_snapshots);
      ++next;
    }
  }
}

double norm_p(const std::vector<double>& x, const Mat& D, double p) {
  const double dx = x.size() > 1 ? x[1] - x[0] : 1.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < D.cols(); ++i) {
    const double a = D.col(i).norm();
    if (std::isinf(p)) s = std::max(s, a);
    else s += dx * std::pow(a, p);
  }
  return std::isinf(p) ? s : std::pow(s, 1.0 / p);
}

DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& v, double p) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (v[i] > 0.0) {
      lx.push_back(std::log1p(t[i]));
      ly.push_back(std::log(v[i]));
    }
  }
  DecayFit f;
  f.p = p;
  if (lx.size() >= 2) {
    const auto lf = fit_line(lx, ly);
    f.slope = lf.slope;
    f.intercept = lf.intercept;
    f.r2 = lf.r2;
  }
  f.samples = static_cast<int>(lx.size());
  if (!t.empty()) {
    f.t_lo = t.front();
    f.t_hi = t.back();
  }
  return f;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<double> sim_grid(const ShockProfile& profile, double T, const SimOptions& opts) {
  const double dx = opts.dx > 0.0 ? opts.dx : profile.dx;
  const double reach = profile_max_speed(profile) * T + opts.margin;
  const double half = std::max(profile.X + reach, opts.min_half_width);
  // aligned with the profile grid when the spacing matches
  const double X = dx == profile.dx ? profile.X + std::ceil((half - profile.X) / dx - 1e-9) * dx
                                    : std::ceil(half / dx - 1e-9) * dx;
  const int M = static_cast<int>(std::lround(2.0 * X / dx)) + 1;
  std::vector<double> x(M);
  for (int i = 0; i < M; ++i) x[i] = -X + i * dx;
  return x;
}

Mat sample_on(const std::vector<double>& x, int rows, const std::function<Vec(double)>& fn) {
  Mat out(rows, static_cast<int>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) out.col(static_cast<int>(i)) = fn(x[i]);
  return out;
}

SimRun evolve_linear(const ShockProfile& profile, const Mat& U0, double T, const SimOptions& opts) {
  const int N = profile.dim(), n = profile.model.n;
  SimRun run;
  run.x = sim_grid(profile, T, opts);
  const int M = static_cast<int>(run.x.size());
  if (U0.rows() != N || U0.cols() != M) throw RelaxError(ErrorKind::InvalidInput, "evolve_linear: U0 must be N x sim_grid size");
  if (!(T >= 0.0)) throw RelaxError(ErrorKind::InvalidInput, "evolve_linear: T must be >= 0");
  run.dx = run.x[1] - run.x[0];
  run.X = -run.x.front();
  run.initial = U0;

  std::vector<Mat> A(M), Q(M);
  bool constant_A = true;
  for (int i = 0; i < M; ++i) {
    const Vec w = profile.state_at(run.x[i]);
    auto c = frame_jacobians(profile.model, w.head(n), w.tail(profile.model.r), profile.shock.s);
    A[i] = std::move(c.A);
    Q[i] = std::move(c.Q);
    constant_A = constant_A && (A[i] - A[0]).norm() <= 1e-12 * (1.0 + A[0].norm());
  }

  auto source = [&](Mat& U, double h) {
    for (int i = 0; i < M; ++i) {
      const Vec u = U.col(i);
      const Vec mid = u + 0.5 * h * (Q[i] * u);
      U.col(i) = u + h * (Q[i] * mid);
    }
  };

  ExactTransport tr;
  double amax = 0.0;
  Mat U = U0;
  if (constant_A && try_exact(A[0], run.dx, tr, run.dt, amax)) {
    run.scheme = "exact-transport";
    tr.w_left = tr.L * U0.col(0);
    tr.w_right = tr.L * U0.col(M - 1);
    run.max_speed = amax;
    run_loop(run, U, T, opts, nullptr, n, [&](Mat& W) {
      source(W, 0.5 * run.dt);
      tr.apply(W);
      source(W, 0.5 * run.dt);
    });
  } else {
    run.scheme = "rusanov";
    for (const auto& a : A) amax = std::max(amax, real_eigen(a).values.cwiseAbs().maxCoeff());
    run.max_speed = amax;
    run.dt = opts.cfl * run.dx / amax;
    const Vec gl = U0.col(0), gr = U0.col(M - 1);
    run_loop(run, U, T, opts, nullptr, n, [&](Mat& W) {
      source(W, 0.5 * run.dt);
      rusanov_step(W, run.dt, run.dx, amax, gl, gr, [&](int i, const Vec& u) -> Vec {
        return A[std::clamp(i, 0, M - 1)] * u;
      });
      source(W, 0.5 * run.dt);
    });
  }
  return run;
}

SimRun evolve_nonlinear(const ShockProfile& profile, const Mat& W0, double T, const SimOptions& opts) {
  const auto& model = profile.model;
  const int N = profile.dim(), n = model.n, r = model.r;
  const double s = profile.shock.s;
  SimRun run;
  run.x = sim_grid(profile, T, opts);
  const int M = static_cast<int>(run.x.size());
  if (W0.rows() != N || W0.cols() != M) throw RelaxError(ErrorKind::InvalidInput, "evolve_nonlinear: W0 must be N x sim_grid size");
  run.dx = run.x[1] - run.x[0];
  run.X = -run.x.front();
  run.initial = W0;
  // Dirichlet data: the initial edge values (endstates for profile runs)
  const Vec Wl = W0.col(0), Wr = W0.col(M - 1);
  Mat background(N, M);
  for (int i = 0; i < M; ++i) background.col(i) = profile.state_at(run.x[i]);

  const bool jx = model.kind == ModelKind::JinXin;
  auto source = [&](Mat& W, double h) {
    if (jx) {
      // q = h(u) - v componentwise
      for (int i = 0; i < M; ++i)
        for (int c = 0; c < r; ++c) {
          const double u = W(c, i), v = W(n + c, i);
          const double q1 = poly_eval(model.h_poly, u) - v;
          const double vm = v + 0.5 * h * q1;
          W(n + c, i) = v + h * (poly_eval(model.h_poly, u) - vm);
        }
      return;
    }
    for (int i = 0; i < M; ++i) {
      const Vec u = W.col(i).head(n), v = W.col(i).tail(r);
      const Vec vm = v + 0.5 * h * model.q(u, v);
      W.col(i).tail(r) = v + h * model.q(u, vm);
    }
  };

  Mat W = W0;
  ExactTransport tr;
  double amax = 0.0;
  const bool linear_flux = jx || model.constant_principal_part;
  Mat A0;
  if (linear_flux) A0 = frame_jacobians(model, Wl.head(n), Wl.tail(r), s).A;
  if (linear_flux && try_exact(A0, run.dx, tr, run.dt, amax)) {
    run.scheme = "exact-transport";
    tr.w_left = tr.L * Wl;
    tr.w_right = tr.L * Wr;
    run.max_speed = amax;
    run_loop(run, W, T, opts, &background, n, [&](Mat& Y) {
      source(Y, 0.5 * run.dt);
      tr.apply(Y);
      source(Y, 0.5 * run.dt);
    });
  } else {
    run.scheme = "rusanov";
    amax = 1.1 * profile_max_speed(profile);
    run.max_speed = amax;
    run.dt = opts.cfl * run.dx / amax;
    run_loop(run, W, T, opts, &background, n, [&](Mat& Y) {
      source(Y, 0.5 * run.dt);
      rusanov_step(Y, run.dt, run.dx, amax, Wl, Wr, [&](int, const Vec& w) -> Vec {
        Vec F(N);
        const Vec u = w.head(n), v = w.tail(r);
        F << model.f(u, v), model.g(u, v);
        return F - s * w;
      });
      source(Y, 0.5 * run.dt);
    });
  }
  return run;
}

// ---------------------------------------------------------------------------

std::vector<DecayFit> decay_report(const SimRun& run, const ShockProfile& profile, const ScatteringTable& table,
                                   const std::vector<double>& p_list, double t_lo, double t_hi) {
  if (run.snapshots.size() != run.times.size())
    throw RelaxError(ErrorKind::InvalidInput, "decay_report: run has no snapshots");
  if (t_hi < 0.0) t_hi = run.times.back();
  if (!(t_lo > 0.0) || t_hi < 10.0 * t_lo * (1.0 - 1e-9))
    throw RelaxError(ErrorKind::InvalidInput, "decay_report: fit window shorter than one decade");
  const int M = static_cast<int>(run.x.size());
  Mat dU(profile.dim(), M);
  for (int i = 0; i < M; ++i) dU.col(i) = -profile.derivative_at(run.x[i]);

  std::vector<double> ts;
  std::vector<std::vector<double>> vals(p_list.size());
  for (std::size_t k = 0; k < run.times.size(); ++k) {
    const double t = run.times[k];
    if (t < t_lo - 1e-9 || t > t_hi + 1e-9) continue;
    double delta = 0.0;
    for (int i = 0; i < M; ++i) delta += run.dx * e_kernel(table, run.x[i], t).dot(run.initial.col(i));
    const Mat D = run.snapshots[k] - delta * dU;
    ts.push_back(t);
    for (std::size_t q = 0; q < p_list.size(); ++q) vals[q].push_back(norm_p(run.x, D, p_list[q]));
  }
  std::vector<DecayFit> out;
  for (std::size_t q = 0; q < p_list.size(); ++q) out.push_back(fit_decay(ts, vals[q], p_list[q]));
  return out;
}

std::vector<GreensCompareRow> greens_compare(const ShockProfile& profile, const ScatteringTable& table, double y0,
                                             const std::vector<double>& times, int component) {
  const int N = profile.dim();
  if (component < 0 || component >= N) throw RelaxError(ErrorKind::InvalidInput, "greens_compare: bad component");
  const double T = times.empty() ? 0.0 : *std::max_element(times.begin(), times.end());
  SimOptions so;
  so.snapshot_times = times;
  const auto x = sim_grid(profile, T, so);
  const int M = static_cast<int>(x.size()), Mp = profile.size();
  const double dx = profile.dx;
  const int off = static_cast<int>(std::lround((profile.x.front() - x.front()) / dx));
  const int k0 = static_cast<int>(std::lround((y0 - x.front()) / dx));
  if (k0 < 1 || k0 > M - 2) throw RelaxError(ErrorKind::InvalidInput, "greens_compare: y0 outside the grid");
  Mat U0 = Mat::Zero(N, M);
  // unit trapezoid mass on three cells
  U0(component, k0 - 1) = 0.25 / dx;
  U0(component, k0) = 0.5 / dx;
  U0(component, k0 + 1) = 0.25 / dx;
  const auto run = evolve_linear(profile, U0, T, so);
  const Mat f = U0.middleCols(off, Mp);

  std::vector<GreensCompareRow> rows;
  for (double t : times) {
    std::size_t k = 0;
    while (k + 1 < run.times.size() && std::abs(run.times[k] - t) > 0.5 * run.dt) ++k;
    const Mat sim = run.snapshots[k].middleCols(off, Mp);
    const auto g = green_apply(profile, table, f, run.times[k]);
    const Mat G = g.total();
    GreensCompareRow row;
    row.t = run.times[k];
    for (int c = 0; c < N; ++c) {
      const double nrm = l1_norm(profile, sim, {c});
      row.rel_error.push_back(nrm > 0.0 ? l1_norm(profile, sim - G, {c}) / nrm : 0.0);
    }
    row.support_lo = run.trace[k].support_lo;
    row.support_hi = run.trace[k].support_hi;
    row.cone_lo = y0 - run.max_speed * row.t - 2.0 * dx;
    row.cone_hi = y0 + run.max_speed * row.t + 2.0 * dx;
    row.support_ok = row.support_lo >= row.cone_lo - 1e-9 && row.support_hi <= row.cone_hi + 1e-9;
    rows.push_back(std::move(row));
  }
  return rows;
}

double fit_shift(const ShockProfile& profile, const std::vector<double>& x, const Mat& W, double guess,
                 double half_width) {
  // only the layer |x| <= X + half_width depends on the shift
  std::vector<int> idx;
  const double lim = profile.X + half_width + std::abs(guess);
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::abs(x[i]) <= lim) idx.push_back(static_cast<int>(i));
  auto J = [&](double d) {
    double s = 0.0;
    for (int i : idx) s += (W.col(i) - profile.state_at(x[i] - d)).squaredNorm();
    return s;
  };
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = guess - half_width, b = guess + half_width;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = J(c), fd = J(d);
  for (int it = 0; it < 200 && b - a > 1e-11; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = J(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = J(d);
    }
  }
  const double best = 0.5 * (a + b);
  if (std::abs(best - guess) > 0.999 * half_width)
    throw RelaxError(ErrorKind::NonConvergence, "fit_shift: minimum at the edge of the search interval");
  return best;
}

NonlinearReport nonlinear_experiment(const ShockProfile& profile, const ScatteringTable& table, double amplitude,
                                     const std::function<double(double)>& shape, double T, double dt_snap) {
  const int N = profile.dim();
  NonlinearReport rep;
  rep.amplitude = amplitude;
  SimOptions so;
  for (double t = 0.0; t <= T + 1e-9; t += dt_snap) so.snapshot_times.push_back(t);
  const auto x = sim_grid(profile, T, so);
  const int M = static_cast<int>(x.size());
  const double dx = x[1] - x[0];
  Mat W0(N, M), P = Mat::Zero(N, M);
  for (int i = 0; i < M; ++i) {
    P(0, i) = amplitude * shape(x[i]);
    W0.col(i) = profile.state_at(x[i]) + P.col(i);
  }
  for (int i = 0; i < M; ++i) rep.mass += dx * P(0, i);
  Vec pert_mass = Vec::Zero(N);
  for (int i = 0; i < M; ++i) pert_mass += dx * P.col(i);
  rep.predicted_shift = table.pi.dot(pert_mass);

  const auto run = evolve_nonlinear(profile, W0, T, so);
  double guess = 0.0;
  std::vector<double> ft, fv;
  for (std::size_t k = 0; k < run.times.size(); ++k) {
    const double t = run.times[k];
    const Mat& W = run.snapshots[k];
    const double d = fit_shift(profile, x, W, guess, 1.0);
    guess = d;
    Mat D(N, M);
    for (int i = 0; i < M; ++i) D.col(i) = W.col(i) - profile.state_at(x[i] - d);
    const double linf = D.cwiseAbs().maxCoeff();
    rep.l1.push_back(norm_p(x, D, 1.0));
    rep.l2.push_back(norm_p(x, D, 2.0));
    double dl = 0.0;
    for (int i = 0; i < M; ++i) dl += dx * e_kernel(table, x[i], t).dot(P.col(i));
    rep.times.push_back(t);
    rep.delta_hat.push_back(d);
    rep.linf.push_back(linf);
    rep.delta_linear.push_back(dl);
    rep.max_abs_delta = std::max(rep.max_abs_delta, std::abs(d));
    if (t >= 10.0 - 1e-9) {
      ft.push_back(t);
      fv.push_back(linf);
    }
  }
  rep.linf_fit = fit_decay(ft, fv, std::numeric_limits<double>::infinity());
  rep.delta_final = rep.delta_hat.empty() ? 0.0 : rep.delta_hat.back();
  const double tol = 0.1 * std::abs(rep.predicted_shift);
  for (std::size_t k = rep.times.size(); k-- > 0;) {
    if (std::abs(rep.delta_hat[k] - rep.predicted_shift) > tol) break;
    rep.plateau_time = rep.times[k];
  }
  return rep;
}

}  // namespace relax

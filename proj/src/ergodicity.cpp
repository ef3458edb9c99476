#include "glsim/ergodicity.hpp"

#include <cmath>
#include <limits>

#include "glsim/rng.hpp"

namespace glsim {

Real capped_distance(const Vec& a, const Vec& b, const MetricSpec& metric) {
  if (!(metric.delta > 0.0)) throw std::invalid_argument("metric: delta must be > 0");
  return std::min(1.0, (a - b).norm() / metric.delta);
}

MixingReport synchronous_coupling(const MixingConfig& cfg) {
  cfg.solver.validate(cfg.forcing);
  if (cfg.u0_a.size() != cfg.u0_b.size() ||
      cfg.u0_a.size() != 2 * static_cast<Index>(cfg.solver.n_modes))
    throw std::invalid_argument("synchronous_coupling: initial state size mismatch");
  const int n_steps = cfg.solver.n_steps();
  const int n_rec = n_steps / cfg.record_stride + 1;

  MixingReport rep;
  rep.pairs = cfg.pairs;
  rep.times.resize(n_rec);
  for (int r = 0; r < n_rec; ++r) rep.times[r] = cfg.solver.dt * r * cfg.record_stride;

  Mat distances(n_rec, cfg.pairs);
  Vec worst(cfg.pairs);
  std::vector<Vec> final_a(static_cast<std::size_t>(cfg.pairs)),
      final_b(static_cast<std::size_t>(cfg.pairs));

  const Stepper stepper(cfg.solver.n_modes, cfg.solver.dt, cfg.forcing, cfg.solver.nonlinearity);
  parallel_for(cfg.pairs, cfg.threads, [&](int p) {
    GaussianStream rng(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(p), "coupling"));
    Vec ua = cfg.u0_a, ub = cfg.u0_b, xi(stepper.n_channels());
    Real prev_norm = (ua - ub).norm();
    Real worst_excess = -std::numeric_limits<Real>::infinity();
    distances(0, p) = std::min(1.0, prev_norm / cfg.metric.delta);
    int rec = 1;
    for (int i = 0; i < n_steps; ++i) {
      rng.fill(xi);
      stepper.step(ua, xi);
      stepper.step(ub, xi);
      const Real d = (ua - ub).norm();
      // Non-increase up to the per-step relative slack plus the absolute
      // rounding floor: stepping two nearby states through identical float
      // operations perturbs their difference by O(eps * ||U||) per step.
      const Real abs_tol = 1e-13 * (1.0 + ua.norm());
      worst_excess = std::max(worst_excess, d - prev_norm * (1.0 + 1e-10) - abs_tol);
      prev_norm = d;
      if ((i + 1) % cfg.record_stride == 0)
        distances(rec++, p) = std::min(1.0, d / cfg.metric.delta);
    }
    worst[p] = worst_excess;
    if (cfg.keep_final_states) {
      final_a[static_cast<std::size_t>(p)] = ua;
      final_b[static_cast<std::size_t>(p)] = ub;
    }
  });

  rep.mean_distance = distances.rowwise().mean();
  rep.worst_step_excess = worst.maxCoeff();
  rep.pathwise_monotone = rep.worst_step_excess <= 0.0;
  if (cfg.keep_final_states) {
    rep.final_a = std::move(final_a);
    rep.final_b = std::move(final_b);
  }

  // Exponential fit on the window where the capped mean has left the cap and
  // is still above the floor.
  std::vector<Real> xs, ys;
  for (int r = 0; r < n_rec; ++r) {
    const Real d = rep.mean_distance[r];
    if (d < cfg.fit_upper && d > cfg.fit_lower) {
      xs.push_back(rep.times[r]);
      ys.push_back(std::log(d));
    }
  }
  if (xs.size() >= 2) {
    Vec x = Eigen::Map<Vec>(xs.data(), static_cast<Index>(xs.size()));
    Vec y = Eigen::Map<Vec>(ys.data(), static_cast<Index>(ys.size()));
    const LinearFit fit = linear_fit(x, y);
    rep.rate = -fit.slope;
    rep.intercept = fit.intercept;
    rep.r_squared = fit.r_squared;
  }
  return rep;
}

Real assignment_mean_cost(const Mat& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n || n == 0) throw std::invalid_argument("assignment: square matrix required");
  // Shortest-augmenting-path assignment with potentials (1-based sentinels).
  const Real inf = std::numeric_limits<Real>::infinity();
  std::vector<Real> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<Real> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      Real delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const Real cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                         v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  Real total = 0.0;
  for (int j = 1; j <= n; ++j) total += cost(p[static_cast<std::size_t>(j)] - 1, j - 1);
  return total / n;
}

Real wasserstein_distance(const std::vector<Vec>& a, const std::vector<Vec>& b,
                          const MetricSpec& metric, int n_modes, int max_mode) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein: empty ensemble");
  if (a.size() != b.size()) throw std::invalid_argument("wasserstein: sample sizes differ");
  max_mode = std::min(max_mode, n_modes);
  std::vector<int> keep;
  for (int i = 0; i < 2 * n_modes; ++i)
    if (index_frequency(n_modes, i) <= max_mode) keep.push_back(i);
  const int n = static_cast<int>(a.size());
  auto proj = [&keep](const Vec& x) {
    Vec y(static_cast<Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) y[static_cast<Index>(i)] = x[keep[i]];
    return y;
  };
  std::vector<Vec> pa(a.size()), pb(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa[i] = proj(a[i]);
    pb[i] = proj(b[i]);
  }
  Mat cost(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cost(i, j) = std::min(1.0, (pa[static_cast<std::size_t>(i)] - pb[static_cast<std::size_t>(j)]).norm() /
                                     metric.delta);
  return assignment_mean_cost(cost);
}

RunningAverage time_average(const Trajectory& traj, const Functional& phi, int stride) {
  if (!traj.dense()) throw std::invalid_argument("time_average: requires a dense trajectory");
  const int n_steps = traj.n_steps();
  const int n_rec = n_steps / stride + 1;
  RunningAverage ra;
  ra.times.resize(n_rec);
  ra.average.resize(n_rec);
  Real integral = 0.0;
  Real prev = phi(traj.states[0], traj.n_modes);
  ra.times[0] = traj.time_at(0);
  ra.average[0] = prev;
  int rec = 1;
  for (int i = 1; i <= n_steps; ++i) {
    const Real cur = phi(traj.states[static_cast<std::size_t>(i)], traj.n_modes);
    integral += 0.5 * traj.dt * (prev + cur);
    prev = cur;
    if (i % stride == 0) {
      ra.times[rec] = traj.time_at(i);
      ra.average[rec] = integral / traj.time_at(i);
      ++rec;
    }
  }
  return ra;
}

namespace {

/// Trapezoid time average of phi over a streamed path of n_steps.
Real streamed_average(const Stepper& stepper, const Functional& phi, Vec u, int n_steps,
                      std::uint64_t seed) {
  GaussianStream rng(seed);
  Vec xi(stepper.n_channels());
  Real integral = 0.0;
  Real prev = phi(u, stepper.n_modes());
  for (int i = 0; i < n_steps; ++i) {
    rng.fill(xi);
    stepper.step(u, xi);
    const Real cur = phi(u, stepper.n_modes());
    integral += 0.5 * stepper.dt() * (prev + cur);
    prev = cur;
  }
  return integral / (stepper.dt() * n_steps);
}

}  // namespace

LlnReport lln_experiment(const LlnConfig& cfg) {
  cfg.solver.validate(cfg.forcing);
  const int n_steps = cfg.solver.n_steps();
  const Stepper stepper(cfg.solver.n_modes, cfg.solver.dt, cfg.forcing, cfg.solver.nonlinearity);
  LlnReport rep;
  rep.averages_a.resize(cfg.paths_per_side);
  rep.averages_b.resize(cfg.paths_per_side);
  parallel_for(2 * cfg.paths_per_side, cfg.threads, [&](int idx) {
    const bool side_a = idx < cfg.paths_per_side;
    const int i = side_a ? idx : idx - cfg.paths_per_side;
    const char* tag = side_a ? "lln-a" : "lln-b";
    const Real avg = streamed_average(stepper, cfg.phi, side_a ? cfg.u0_a : cfg.u0_b, n_steps,
                                      derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i), tag));
    (side_a ? rep.averages_a : rep.averages_b)[i] = avg;
  });
  const SampleStats sa = sample_stats(rep.averages_a);
  const SampleStats sb = sample_stats(rep.averages_b);
  rep.mean_a = sa.mean;
  rep.sem_a = sa.sem;
  rep.mean_b = sb.mean;
  rep.sem_b = sb.sem;
  rep.gap = std::abs(sa.mean - sb.mean);
  rep.tolerance = 2.0 * std::sqrt(sa.sem * sa.sem + sb.sem * sb.sem);
  rep.consistent = rep.gap <= rep.tolerance;
  return rep;
}

CltReport clt_experiment(const CltConfig& cfg) {
  cfg.solver.validate(cfg.forcing);
  if (cfg.reps < 100) throw std::invalid_argument("clt_experiment: reps must be >= 100");
  const Stepper stepper(cfg.solver.n_modes, cfg.solver.dt, cfg.forcing, cfg.solver.nonlinearity);
  const Real dt = cfg.solver.dt;
  const int burn_steps = static_cast<int>(std::llround(cfg.burn_in / dt));
  const int aux_steps = static_cast<int>(std::llround(cfg.aux_time / dt));
  const int t_steps = cfg.solver.n_steps();

  CltReport rep;
  rep.phi_descriptor = cfg.phi.describe();

  // Auxiliary ensemble: reference mean and batch-means variance, independent
  // of the normalized samples below.
  const int rec_stride = cfg.record_stride;
  const int n_rec = aux_steps / rec_stride;
  Mat aux_series(n_rec, cfg.aux_paths);
  Vec aux_means(cfg.aux_paths);
  parallel_for(cfg.aux_paths, cfg.threads, [&](int p) {
    GaussianStream rng(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(p), "clt-aux"));
    Vec u = Vec::Zero(2 * cfg.solver.n_modes), xi(stepper.n_channels());
    for (int i = 0; i < burn_steps; ++i) {
      rng.fill(xi);
      stepper.step(u, xi);
    }
    Real integral = 0.0;
    Real prev = cfg.phi(u, stepper.n_modes());
    int rec = 0;
    for (int i = 0; i < aux_steps; ++i) {
      rng.fill(xi);
      stepper.step(u, xi);
      const Real cur = cfg.phi(u, stepper.n_modes());
      integral += 0.5 * dt * (prev + cur);
      prev = cur;
      if ((i + 1) % rec_stride == 0) aux_series(rec++, p) = cur;
    }
    aux_means[p] = integral / cfg.aux_time;
  });
  const SampleStats ms = sample_stats(aux_means);
  rep.m_hat = ms.mean;
  rep.m_hat_sem = ms.sem;

  const int batch_obs = static_cast<int>(std::llround(cfg.batch_len / (dt * rec_stride)));
  std::vector<Real> batch_means;
  for (int p = 0; p < cfg.aux_paths; ++p) {
    const int n_batches = n_rec / batch_obs;
    for (int b = 0; b < n_batches; ++b)
      batch_means.push_back(
          aux_series.col(p).segment(static_cast<Index>(b) * batch_obs, batch_obs).mean());
  }
  {
    Vec bm = Eigen::Map<Vec>(batch_means.data(), static_cast<Index>(batch_means.size()));
    const SampleStats bs = sample_stats(bm);
    rep.sigma_sq = bs.variance * cfg.batch_len;
  }

  rep.degenerate = !(rep.sigma_sq > 1e-12);
  rep.samples.resize(cfg.reps);
  parallel_for(cfg.reps, cfg.threads, [&](int r) {
    GaussianStream rng(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(r), "clt-rep"));
    Vec u = Vec::Zero(2 * cfg.solver.n_modes), xi(stepper.n_channels());
    for (int i = 0; i < burn_steps; ++i) {
      rng.fill(xi);
      stepper.step(u, xi);
    }
    Real integral = 0.0;
    Real prev = cfg.phi(u, stepper.n_modes());
    for (int i = 0; i < t_steps; ++i) {
      rng.fill(xi);
      stepper.step(u, xi);
      const Real cur = cfg.phi(u, stepper.n_modes());
      integral += 0.5 * dt * (prev + cur);
      prev = cur;
    }
    rep.samples[r] = (integral - cfg.solver.horizon * rep.m_hat) / std::sqrt(cfg.solver.horizon);
  });

  if (!rep.degenerate) rep.ks = ks_test_normal(rep.samples, 0.0, std::sqrt(rep.sigma_sq));
  return rep;
}

InvariantStats invariant_stats(const StatsConfig& cfg) {
  cfg.solver.validate(cfg.forcing);
  if (!(cfg.burn_in >= 0.0) || cfg.burn_in >= cfg.solver.horizon)
    throw std::invalid_argument("invariant_stats: burn-in must be in [0, horizon)");
  const Stepper stepper(cfg.solver.n_modes, cfg.solver.dt, cfg.forcing, cfg.solver.nonlinearity);
  const int d = stepper.dim();
  const int burn_steps = static_cast<int>(std::llround(cfg.burn_in / cfg.solver.dt));
  const int total_steps = cfg.solver.n_steps();

  GaussianStream rng(cfg.solver.seed);
  Vec u = cfg.u0.size() == d ? cfg.u0 : Vec::Zero(d);
  Vec xi(stepper.n_channels());
  for (int i = 0; i < burn_steps; ++i) {
    rng.fill(xi);
    stepper.step(u, xi);
  }
  Vec sum = Vec::Zero(d), sum_sq = Vec::Zero(d);
  Real sum_norm = 0.0, sum_vnorm = 0.0;
  const SobolevIndex v1{1.0, SobolevIndex::Family::Vs};
  int count = 0;
  for (int i = burn_steps; i < total_steps; ++i) {
    rng.fill(xi);
    stepper.step(u, xi);
    sum += u;
    sum_sq += u.cwiseAbs2();
    sum_norm += u.squaredNorm();
    const Real v = norm(u, cfg.solver.n_modes, v1);
    sum_vnorm += v * v;
    ++count;
  }
  InvariantStats st;
  st.mode_mean = sum / count;
  st.mode_second_moment = sum_sq / count;
  st.mean_sq_norm = sum_norm / count;
  st.mean_sq_vnorm = sum_vnorm / count;
  st.duration = count * cfg.solver.dt;
  st.spectrum.resize(cfg.solver.n_modes);
  for (int k = 1; k <= cfg.solver.n_modes; ++k)
    st.spectrum[k - 1] = st.mode_second_moment[mode_index(cfg.solver.n_modes, k)] +
                         st.mode_second_moment[mode_index(cfg.solver.n_modes, -k)];
  return st;
}

}  // namespace glsim

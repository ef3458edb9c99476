#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "glsim/ergodicity.hpp"
#include "glsim/rng.hpp"
#include "oracles.hpp"

using namespace glsim;

TEST_CASE("capped distance") {
  Vec a = Vec::Zero(4), b = Vec::Zero(4);
  b[0] = 0.25;
  CHECK(capped_distance(a, b, {1.0}) == doctest::Approx(0.25));
  CHECK(capped_distance(a, b, {0.1}) == doctest::Approx(1.0));
  CHECK(capped_distance(a, a, {1.0}) == 0.0);
  CHECK_THROWS_AS(capped_distance(a, b, {0.0}), std::invalid_argument);
}

TEST_CASE("identical initial states stay glued under the coupling") {
  MixingConfig cfg;
  cfg.solver.n_modes = 8;
  cfg.solver.dt = 1e-3;
  cfg.solver.horizon = 0.2;
  cfg.forcing = ForcingSpec::uniform({-2, -1, 1, 2}, 1.0);
  cfg.u0_a = Vec::Zero(16);
  cfg.u0_b = Vec::Zero(16);
  cfg.pairs = 4;
  cfg.record_stride = 50;
  cfg.master_seed = 1;
  cfg.threads = 2;
  MixingReport rep = synchronous_coupling(cfg);
  CHECK(rep.mean_distance.cwiseAbs().maxCoeff() == 0.0);
  CHECK(rep.pathwise_monotone);
}

TEST_CASE("coupled pairs contract pathwise and the mean decays") {
  MixingConfig cfg;
  cfg.solver.n_modes = 8;
  cfg.solver.dt = 1e-3;
  cfg.solver.horizon = 8.0;
  cfg.forcing = ForcingSpec::uniform({-2, -1, 1, 2}, 1.0);
  cfg.u0_a = Vec::Zero(16);
  cfg.u0_b = Vec::Zero(16);
  cfg.u0_b[mode_index(8, 1)] = 3.0;
  cfg.u0_b[mode_index(8, -2)] = 1.0;
  cfg.pairs = 8;
  cfg.record_stride = 200;
  cfg.master_seed = 4;
  cfg.threads = 2;
  cfg.keep_final_states = true;
  MixingReport rep = synchronous_coupling(cfg);
  CHECK(rep.pathwise_monotone);
  CHECK(rep.mean_distance[0] == doctest::Approx(1.0));  // capped at the start
  CHECK(rep.mean_distance[rep.mean_distance.size() - 1] < rep.mean_distance[0]);
  CHECK(rep.rate > 0.0);
  for (Real d : rep.mean_distance) {
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
  }
  // coupling upper-bounds the empirical transport distance
  const Real w =
      wasserstein_distance(rep.final_a, rep.final_b, cfg.metric, cfg.solver.n_modes, 4);
  const Real coupling_mean = rep.mean_distance[rep.mean_distance.size() - 1];
  CHECK(w <= coupling_mean + 1e-9);
}

TEST_CASE("assignment solver against brute force") {
  GaussianStream rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 4;
    Mat cost(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) cost(i, j) = std::abs(rng.next());
    CHECK(assignment_mean_cost(cost) ==
          doctest::Approx(oracles::brute_force_assignment(cost)).epsilon(1e-12));
  }
}

TEST_CASE("transport distance basics") {
  std::vector<Vec> a, b;
  GaussianStream rng(8);
  for (int i = 0; i < 6; ++i) {
    Vec x(8);
    rng.fill(x);
    a.push_back(x);
    b.push_back(x);
  }
  CHECK(wasserstein_distance(a, a, {1.0}, 4) == doctest::Approx(0.0));
  CHECK(wasserstein_distance(a, b, {1.0}, 4) == doctest::Approx(0.0));
  // two point masses: the distance is the capped pointwise distance, with the
  // projection to |k| <= 4 exact here (n_modes = 4)
  std::vector<Vec> pa{Vec::Zero(8)}, pb{Vec::Zero(8)};
  pb[0][0] = 0.5;
  CHECK(wasserstein_distance(pa, pb, {1.0}, 4) == doctest::Approx(0.5));
  CHECK(wasserstein_distance(pa, pb, {0.1}, 4) == doctest::Approx(1.0));
  std::vector<Vec> shuffled = {a[2], a[0], a[1], a[3], a[5], a[4]};
  CHECK(wasserstein_distance(a, shuffled, {1.0}, 4) == doctest::Approx(0.0));
  CHECK_THROWS_AS(wasserstein_distance({}, {}, {1.0}, 4), std::invalid_argument);
}

TEST_CASE("running time average of a constant is the constant") {
  SolverConfig cfg;
  cfg.n_modes = 4;
  cfg.dt = 1e-2;
  cfg.horizon = 0.5;
  cfg.seed = 3;
  Trajectory traj = integrate(Vec::Zero(8), cfg, ForcingSpec::uniform({-1, 1}, 1.0));
  RunningAverage ra = time_average(traj, Functional::constant(0.7), 10);
  CHECK((ra.average.array() - 0.7).abs().maxCoeff() < 1e-14);
}

TEST_CASE("time averages from two initial conditions approach each other") {
  LlnConfig cfg;
  cfg.solver.n_modes = 8;
  cfg.solver.dt = 2e-3;
  cfg.solver.horizon = 60.0;
  cfg.forcing = ForcingSpec::uniform({-2, -1, 1, 2}, 1.0);
  cfg.phi = Functional::capped_low_mode_norm(2, 1.0);
  cfg.u0_a = Vec::Zero(16);
  cfg.u0_b = Vec::Zero(16);
  cfg.u0_b[mode_index(8, 1)] = 4.0;
  cfg.paths_per_side = 4;
  cfg.master_seed = 11;
  cfg.threads = 2;
  LlnReport rep = lln_experiment(cfg);
  CHECK(rep.gap < 0.1);            // both sides near the invariant mean
  CHECK(std::isfinite(rep.tolerance));
  CHECK(rep.mean_a > 0.1);         // the observable is nontrivial
}

TEST_CASE("running average variance shrinks roughly like 1/T") {
  // blocked variance over the tail of a single long path
  SolverConfig cfg;
  cfg.n_modes = 8;
  cfg.dt = 2e-3;
  cfg.horizon = 160.0;
  cfg.seed = 13;
  ForcingSpec f = ForcingSpec::uniform({-2, -1, 1, 2}, 1.0);
  const Stepper stepper(cfg.n_modes, cfg.dt, f);
  GaussianStream rng(cfg.seed);
  Vec u = Vec::Zero(16), xi(4);
  const Functional phi = Functional::capped_low_mode_norm(2, 1.0);
  const int n = cfg.n_steps();
  Vec series(n);
  for (int i = 0; i < n; ++i) {
    rng.fill(xi);
    stepper.step(u, xi);
    series[i] = phi(u, cfg.n_modes);
  }
  const Real sigma_short = batch_means_variance(series.head(n / 4), cfg.dt, n / 16);
  const Real sigma_long = batch_means_variance(series, cfg.dt, n / 16);
  // the asymptotic variance estimate is stable; Var of the mean itself scales
  // down with T, so the two estimates agree within a loose factor
  CHECK(sigma_long > 0.0);
  CHECK(sigma_short / sigma_long < 8.0);
  CHECK(sigma_long / sigma_short < 8.0);
}

TEST_CASE("clt experiment: constant observable takes the degenerate branch") {
  CltConfig cfg;
  cfg.solver.n_modes = 4;
  cfg.solver.dt = 1e-2;
  cfg.solver.horizon = 2.0;
  cfg.forcing = ForcingSpec::uniform({-1, 1}, 1.0);
  cfg.phi = Functional::constant(1.0);
  cfg.burn_in = 0.5;
  cfg.reps = 100;
  cfg.aux_time = 20.0;
  cfg.aux_paths = 2;
  cfg.batch_len = 2.0;
  cfg.record_stride = 5;
  cfg.master_seed = 17;
  cfg.threads = 2;
  CltReport rep = clt_experiment(cfg);
  CHECK(rep.degenerate);
  CHECK(rep.samples.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(rep.m_hat == doctest::Approx(1.0));
}

TEST_CASE("clt samples look normal for a mixing observable at small scale") {
  CltConfig cfg;
  cfg.solver.n_modes = 4;
  cfg.solver.dt = 5e-3;
  cfg.solver.horizon = 20.0;
  cfg.forcing = ForcingSpec::uniform({-2, -1, 1, 2}, 1.0);
  cfg.phi = Functional::tanh_coeff(1);
  cfg.burn_in = 5.0;
  cfg.reps = 120;
  cfg.aux_time = 400.0;
  cfg.aux_paths = 4;
  cfg.batch_len = 10.0;
  cfg.record_stride = 10;
  cfg.master_seed = 19;
  cfg.threads = 2;
  CltReport rep = clt_experiment(cfg);
  CHECK_FALSE(rep.degenerate);
  CHECK(rep.sigma_sq > 0.0);
  CHECK(rep.ks.p_value > 1e-4);  // loose sanity at this tiny scale
  CHECK(std::abs(rep.m_hat) < 0.2);  // odd observable, symmetric law
}

TEST_CASE("ks test accepts its own reference and rejects a shifted one") {
  GaussianStream rng(23);
  Vec samples(400);
  rng.fill(samples);
  KsResult ok = ks_test_normal(samples, 0.0, 1.0);
  CHECK(ok.p_value > 0.05);
  KsResult off = ks_test_normal(samples, 2.0, 1.0);
  CHECK(off.p_value < 1e-6);
}

TEST_CASE("invariant statistics recover the linear mode variances") {
  StatsConfig cfg;
  cfg.solver.n_modes = 4;
  cfg.solver.dt = 1e-3;
  cfg.solver.horizon = 600.0;
  cfg.solver.seed = 29;
  cfg.solver.nonlinearity = false;
  cfg.forcing = ForcingSpec::uniform({2, 3}, 1.0);
  cfg.u0 = Vec::Zero(8);
  cfg.burn_in = 20.0;
  InvariantStats st = invariant_stats(cfg);
  CHECK(st.mode_second_moment[mode_index(4, 2)] ==
        doctest::Approx(oracles::ou_stationary_variance(2, 1.0)).epsilon(0.08));
  CHECK(st.mode_second_moment[mode_index(4, 3)] ==
        doctest::Approx(oracles::ou_stationary_variance(3, 1.0)).epsilon(0.08));
  // unforced modes carry no variance in the linear debug dynamics
  CHECK(st.mode_second_moment[mode_index(4, -1)] == 0.0);
  CHECK(st.mode_second_moment[mode_index(4, 4)] == 0.0);
  CHECK(st.mean_sq_norm > 0.0);
}

TEST_CASE("nonlinear transfer puts energy outside the forced set") {
  StatsConfig cfg;
  cfg.solver.n_modes = 8;
  cfg.solver.dt = 2e-3;
  cfg.solver.horizon = 100.0;
  cfg.solver.seed = 31;
  cfg.forcing = ForcingSpec::uniform({-2, -1, 1, 2}, 1.0);
  cfg.u0 = Vec::Zero(16);
  cfg.burn_in = 10.0;
  InvariantStats st = invariant_stats(cfg);
  CHECK(st.spectrum[2] > 1e-6);  // frequency 3: outside the forced band
  CHECK(st.spectrum[3] > 1e-7);
}

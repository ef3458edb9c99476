#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "glsim/solver.hpp"
#include "oracles.hpp"

using namespace glsim;

namespace {
ForcingSpec z4_forcing() { return ForcingSpec::uniform({-2, -1, 1, 2}, 1.0); }
}  // namespace

TEST_CASE("forcing validation") {
  ForcingSpec f = z4_forcing();
  CHECK(f.symmetric());
  CHECK(f.max_frequency() == 2);
  f.validate(8);
  CHECK_THROWS_AS(ForcingSpec::uniform({0}, 1.0).validate(8), std::invalid_argument);
  CHECK_THROWS_AS(ForcingSpec::uniform({9}, 1.0).validate(8), std::invalid_argument);
  CHECK_THROWS_AS(ForcingSpec::uniform({1, 1}, 1.0).validate(8), std::invalid_argument);
  CHECK_THROWS_AS(ForcingSpec::uniform({1}, 0.0).validate(8), std::invalid_argument);
  CHECK_FALSE(ForcingSpec::uniform({1, 2}, 1.0).symmetric());
}

TEST_CASE("forcing moments") {
  ForcingSpec f = z4_forcing();
  CHECK(f.forcing_moment(0) == doctest::Approx(4.0));
  CHECK(f.forcing_moment(1) == doctest::Approx(10.0));  // 1 + 1 + 4 + 4
}

TEST_CASE("config validation") {
  SolverConfig cfg;
  cfg.dt = -1;
  CHECK_THROWS_AS(cfg.validate(z4_forcing()), std::invalid_argument);
  cfg.dt = 1e-3;
  cfg.horizon = 0.0105;  // not a multiple of dt
  CHECK_THROWS_AS(cfg.n_steps(), std::invalid_argument);
  cfg.horizon = 1.0;
  cfg.validate(z4_forcing());
  CHECK(cfg.n_steps() == 1000);
}

TEST_CASE("zero forcing and zero state is a fixed point") {
  SolverConfig cfg;
  cfg.n_modes = 8;
  cfg.horizon = 0.1;
  ForcingSpec f = ForcingSpec::uniform({1}, 1e-300);  // effectively off, must be nonzero
  f.amps[0] = 1e-300;
  const Stepper stepper(cfg.n_modes, cfg.dt, f);
  Vec u = Vec::Zero(16);
  for (int i = 0; i < 10; ++i) stepper.step_deterministic(u);
  CHECK(u.norm() == 0.0);
}

TEST_CASE("noise-free dynamics is pathwise dissipative") {
  const int n = 16;
  const Stepper stepper(n, 1e-3, ForcingSpec::uniform({1}, 1.0));
  GaussianStream rng(11);
  Vec u(2 * n);
  rng.fill(u);
  u *= 2.0;
  Real prev = u.norm();
  for (int i = 0; i < 2000; ++i) {
    stepper.step_deterministic(u);
    const Real cur = u.norm();
    CHECK(cur <= prev * (1.0 + 1e-8));
    prev = cur;
  }
  CHECK(prev < 2.0);  // strict contraction from a large state
}

TEST_CASE("large initial data decays by T = 1") {
  SolverConfig cfg;
  cfg.n_modes = 16;
  cfg.horizon = 1.0;
  const Stepper stepper(cfg.n_modes, cfg.dt, z4_forcing());
  Vec u = Vec::Zero(stepper.dim());
  u[mode_index(cfg.n_modes, 1)] = 5.0;
  for (int i = 0; i < cfg.n_steps(); ++i) stepper.step_deterministic(u);
  CHECK(u.norm() < 5.0);
}

TEST_CASE("integrate is deterministic in the seed") {
  SolverConfig cfg;
  cfg.n_modes = 8;
  cfg.horizon = 0.25;
  cfg.seed = 77;
  Vec u0 = Vec::Zero(16);
  Trajectory a = integrate(u0, cfg, z4_forcing());
  Trajectory b = integrate(u0, cfg, z4_forcing());
  CHECK((a.states.back() - b.states.back()).norm() == 0.0);
  CHECK((a.noise - b.noise).norm() == 0.0);
  cfg.seed = 78;
  Trajectory c = integrate(u0, cfg, z4_forcing());
  CHECK((a.states.back() - c.states.back()).norm() != 0.0);
}

TEST_CASE("replaying stored noise reproduces states bit for bit") {
  SolverConfig cfg;
  cfg.n_modes = 8;
  cfg.horizon = 0.25;
  cfg.seed = 5;
  Vec u0 = Vec::Zero(16);
  Trajectory a = integrate(u0, cfg, z4_forcing());
  Trajectory b = integrate_with_noise(u0, cfg, z4_forcing(), a.noise);
  for (std::size_t i = 0; i < a.states.size(); ++i)
    CHECK((a.states[i] - b.states[i]).norm() == 0.0);
}

TEST_CASE("strided trajectories replay intermediate states exactly") {
  SolverConfig cfg;
  cfg.n_modes = 8;
  cfg.horizon = 0.2;
  cfg.seed = 9;
  Vec u0 = Vec::Zero(16);
  Trajectory dense = integrate(u0, cfg, z4_forcing());
  cfg.snapshot_stride = 50;
  Trajectory strided = integrate_with_noise(u0, cfg, z4_forcing(), dense.noise);
  CHECK(strided.states.size() == 5);
  for (int step : {0, 13, 50, 117, 200})
    CHECK((strided.state_at(step) - dense.states[static_cast<std::size_t>(step)]).norm() == 0.0);
}

TEST_CASE("drift closed forms") {
  SpectralField zero = SpectralField::zero(8);
  CHECK(drift(zero).coeffs.norm() == 0.0);
  // drift(sin z) = -sin z + sin z - sin^3 z = -(3/4) sin z + (1/4) sin 3z
  SpectralField f = SpectralField::zero(8);
  f.coeff(1) = std::sqrt(M_PI);
  SpectralField d = drift(f);
  CHECK(d.coeff(1) == doctest::Approx(-0.75 * std::sqrt(M_PI)).epsilon(1e-12));
  CHECK(d.coeff(3) == doctest::Approx(0.25 * std::sqrt(M_PI)).epsilon(1e-12));
  // drift(2 cos 2z) = -12 cos 2z - 2 cos 6z
  SpectralField g = SpectralField::zero(8);
  g.coeff(-2) = 2.0 * std::sqrt(M_PI);
  SpectralField dg = drift(g);
  CHECK(dg.coeff(-2) == doctest::Approx(-12.0 * std::sqrt(M_PI)).epsilon(1e-12));
  CHECK(dg.coeff(-6) == doctest::Approx(-2.0 * std::sqrt(M_PI)).epsilon(1e-12));
}

TEST_CASE("linear-mode stationary variance matches the closed form") {
  // Linear dynamics, single forced mode k = 2: an exact AR(1) with known
  // stationary variance beta^2 / (2 (k^2 - 1)).
  SolverConfig cfg;
  cfg.n_modes = 4;
  cfg.dt = 1e-3;
  cfg.horizon = 400.0;
  cfg.seed = 21;
  cfg.nonlinearity = false;
  ForcingSpec f = ForcingSpec::uniform({2}, 1.0);
  const Stepper stepper(cfg.n_modes, cfg.dt, f, false);
  GaussianStream rng(cfg.seed);
  Vec u = Vec::Zero(stepper.dim()), xi(1);
  const int burn = 5000;
  Real acc = 0.0;
  int count = 0;
  for (int i = 0; i < cfg.n_steps(); ++i) {
    rng.fill(xi);
    stepper.step(u, xi);
    if (i >= burn) {
      const Real x = u[mode_index(cfg.n_modes, 2)];
      acc += x * x;
      ++count;
    }
  }
  const Real var = acc / count;
  CHECK(var == doctest::Approx(oracles::ou_stationary_variance(2, 1.0)).epsilon(0.06));
}

TEST_CASE("linear growth of the second moment from zero matches the isometry") {
  // E ||U_t||^2 = sum_k beta_k^2 int_0^t e^{2 lam s} ds ~ B_0 t for small t.
  SolverConfig cfg;
  cfg.n_modes = 4;
  cfg.dt = 1e-3;
  cfg.horizon = 0.05;
  cfg.nonlinearity = false;
  ForcingSpec f = z4_forcing();
  const Stepper stepper(cfg.n_modes, cfg.dt, f, false);
  const int paths = 4000;
  Real acc = 0.0;
  for (int p = 0; p < paths; ++p) {
    GaussianStream rng(derive_seed(1234, static_cast<std::uint64_t>(p), "iso"));
    Vec u = Vec::Zero(stepper.dim()), xi(4);
    for (int i = 0; i < cfg.n_steps(); ++i) {
      rng.fill(xi);
      stepper.step(u, xi);
    }
    acc += u.squaredNorm();
  }
  const Real mean = acc / paths;
  Real exact = 0.0;
  for (std::size_t j = 0; j < f.modes.size(); ++j)
    exact += oracles::ou_gram_integral(f.modes[j], f.amps[static_cast<Index>(j)], cfg.horizon);
  CHECK(mean == doctest::Approx(exact).epsilon(0.05));
  CHECK(exact == doctest::Approx(f.forcing_moment(0) * cfg.horizon).epsilon(0.11));
}

TEST_CASE("blow-up guard trips on absurd states") {
  const Stepper stepper(4, 1e-3, ForcingSpec::uniform({1}, 1.0));
  Vec u = Vec::Zero(8), xi = Vec::Zero(1);
  u[0] = 2e6;
  CHECK_THROWS_AS(stepper.step(u, xi), NumericalGuard);
}

TEST_CASE("diagnostics series") {
  SolverConfig cfg;
  cfg.n_modes = 8;
  cfg.horizon = 0.2;
  cfg.seed = 3;
  Vec u0 = Vec::Zero(16);
  u0[mode_index(8, 1)] = 2.0;
  Trajectory traj = integrate(u0, cfg, z4_forcing());
  DiagnosticParams params;
  params.power = 2;
  params.order = 1;
  DiagnosticSeries s = diagnostics(traj, params);
  CHECK(s.energy[0] == doctest::Approx(4.0));  // E(0) = ||U_0||^2
  CHECK(s.forcing_b0 == doctest::Approx(4.0));
  CHECK(s.forcing_bn == doctest::Approx(10.0));
  // the integral part of E(t) is non-decreasing
  for (Index i = 1; i < s.energy.size(); ++i) {
    const Real int_prev = s.energy[i - 1] - s.l2_norm[i - 1] * s.l2_norm[i - 1];
    const Real int_cur = s.energy[i] - s.l2_norm[i] * s.l2_norm[i];
    CHECK(int_cur >= int_prev - 1e-12);
  }
}

TEST_CASE("power norm is exact for a pure mode") {
  // || (sin z)^2 || = sqrt(int sin^4) = sqrt(3 pi / 4)
  SpectralField f = SpectralField::zero(6);
  f.coeff(1) = std::sqrt(M_PI);
  CHECK(power_norm(f, 2) == doctest::Approx(std::sqrt(3.0 * M_PI / 4.0)).epsilon(1e-12));
  // high powers go through the padded grid and stay exact
  const Real direct = std::sqrt(oracles::quadrature([](Real z) { return std::pow(std::sin(z), 8); }));
  CHECK(power_norm(f, 4) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("seed derivation contract") {
  CHECK(derive_seed(1, 2, "x") == derive_seed(1, 2, "x"));
  CHECK(derive_seed(1, 2, "x") != derive_seed(1, 2, "y"));
  CHECK(derive_seed(1, 2, "x") != derive_seed(1, 3, "x"));
  CHECK(derive_seed(2, 2, "x") != derive_seed(1, 2, "x"));
}

TEST_CASE("swapping path indices swaps the trajectories exactly") {
  SolverConfig cfg;
  cfg.n_modes = 4;
  cfg.horizon = 0.05;
  ForcingSpec f = z4_forcing();
  auto run = [&](std::uint64_t idx) {
    SolverConfig c = cfg;
    c.seed = derive_seed(99, idx, "swap");
    return integrate(Vec::Zero(8), c, f);
  };
  Trajectory t0 = run(0), t1 = run(1), t0b = run(0);
  CHECK((t0.states.back() - t0b.states.back()).norm() == 0.0);
  CHECK((t0.states.back() - t1.states.back()).norm() != 0.0);
}

TEST_CASE("self-convergence under dt refinement on a common Brownian path") {
  // Reference at dt/4; coarser runs consume aggregated increments of the same
  // path. First-order weak/pathwise behavior shows as an error ratio near 2.
  const int n = 8;
  const Real T = 0.25;
  const Real dt_fine = 2.5e-4;
  ForcingSpec f = z4_forcing();
  SolverConfig fine;
  fine.n_modes = n;
  fine.dt = dt_fine;
  fine.horizon = T;
  fine.seed = 1001;
  Vec u0 = Vec::Zero(2 * n);
  u0[mode_index(n, 1)] = 1.0;
  Trajectory ref = integrate(u0, fine, f);

  auto coarse_run = [&](int agg) {
    SolverConfig cfg;
    cfg.n_modes = n;
    cfg.dt = dt_fine * agg;
    cfg.horizon = T;
    Mat noise(f.n_channels(), cfg.n_steps());
    for (Index c = 0; c < noise.cols(); ++c) {
      Vec sum = Vec::Zero(f.n_channels());
      for (int a = 0; a < agg; ++a) sum += ref.noise.col(c * agg + a);
      noise.col(c) = sum / std::sqrt(static_cast<Real>(agg));
    }
    return integrate_with_noise(u0, cfg, f, noise).states.back();
  };
  const Real err4 = (coarse_run(4) - ref.states.back()).norm();
  const Real err2 = (coarse_run(2) - ref.states.back()).norm();
  CHECK(err2 < err4);
  const Real ratio = err4 / err2;
  CHECK(ratio > 1.3);
  CHECK(ratio < 4.0);
}

TEST_CASE("ensemble second moment of the squared field is stable under dt halving") {
  // E ||U_1^2||^2 from U_0 = 0 stays finite and consistent between dt and
  // dt/2 within Monte Carlo error.
  const int n = 8, paths = 48;
  ForcingSpec f = z4_forcing();
  auto ensemble_mean = [&](Real dt) {
    SolverConfig cfg;
    cfg.n_modes = n;
    cfg.dt = dt;
    cfg.horizon = 1.0;
    Vec vals(paths);
    for (int p = 0; p < paths; ++p) {
      cfg.seed = derive_seed(3131, static_cast<std::uint64_t>(p), "moment");
      GaussianStream rng(cfg.seed);
      const Stepper stepper(n, dt, f);
      Vec u = Vec::Zero(2 * n), xi(f.n_channels());
      for (int i = 0; i < cfg.n_steps(); ++i) {
        rng.fill(xi);
        stepper.step(u, xi);
      }
      const Real pn = power_norm(SpectralField(n, u), 2);
      vals[p] = pn * pn;
    }
    Real mean = vals.mean();
    Real sem = std::sqrt((vals.array() - mean).square().sum() / (paths - 1) / paths);
    return std::make_pair(mean, sem);
  };
  const auto [coarse, sem_c] = ensemble_mean(2e-3);
  const auto [fine, sem_f] = ensemble_mean(1e-3);
  CHECK(std::isfinite(coarse));
  CHECK(std::isfinite(fine));
  CHECK(std::abs(coarse - fine) <= 3.0 * std::sqrt(sem_c * sem_c + sem_f * sem_f) + 0.05 * fine);
}

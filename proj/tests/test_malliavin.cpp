#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "glsim/malliavin.hpp"
#include "glsim/rng.hpp"
#include "oracles.hpp"

using namespace glsim;

namespace {

Trajectory quiescent_path(int n_modes, const ForcingSpec& f, Real horizon, Real dt = 1e-3) {
  SolverConfig cfg;
  cfg.n_modes = n_modes;
  cfg.dt = dt;
  cfg.horizon = horizon;
  ForcingSpec weak = f;
  weak.amps.setConstant(1e-300);
  Mat noise = Mat::Zero(f.n_channels(), cfg.n_steps());
  Trajectory traj = integrate_with_noise(Vec::Zero(2 * n_modes), cfg, weak, noise);
  traj.forcing = f;  // the linearization window sees the true amplitudes
  return traj;
}

Trajectory nonlinear_path(int n_modes, Real horizon, std::uint64_t seed) {
  SolverConfig cfg;
  cfg.n_modes = n_modes;
  cfg.dt = 1e-3;
  cfg.horizon = horizon;
  cfg.seed = seed;
  return integrate(Vec::Zero(2 * n_modes), cfg, ForcingSpec::uniform({-2, -1, 1, 2}, 1.0));
}

}  // namespace

TEST_CASE("linear case: neutral forced mode gives <M e1, e1> = T") {
  const Real T = 1.0;
  Trajectory traj = quiescent_path(4, ForcingSpec::uniform({1}, 1.0), T);
  MalliavinOp op = assemble_malliavin(traj, 0, traj.n_steps());
  const int i1 = mode_index(4, 1);
  CHECK(op.m(i1, i1) == doctest::Approx(T).epsilon(1e-6));
  Mat rest = op.m;
  rest(i1, i1) = 0.0;
  CHECK(rest.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("linear case: damped forced mode matches the closed-form integral") {
  const Real T = 1.0;
  Trajectory traj = quiescent_path(4, ForcingSpec::uniform({2}, 1.0), T);
  MalliavinOp op = assemble_malliavin(traj, 0, traj.n_steps());
  const int i2 = mode_index(4, 2);
  const Real expected = (1.0 - std::exp(-6.0 * T)) / 6.0;
  CHECK(op.m(i2, i2) == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("adjoint channel series on the quiescent path") {
  Trajectory traj = quiescent_path(4, ForcingSpec::uniform({1}, 1.0), 0.5);
  MalliavinOp op = assemble_malliavin(traj, 0, traj.n_steps());
  // phi = b_2: K phi stays on mode 2, so channel 1 reads zero.
  Vec phi = Vec::Zero(8);
  phi[mode_index(4, 2)] = 1.0;
  CHECK(op.apply_astar(phi).cwiseAbs().maxCoeff() < 1e-14);
  // phi = b_1: the neutral mode holds, channel reads a constant 1.
  Vec e1 = Vec::Zero(8);
  e1[mode_index(4, 1)] = 1.0;
  Vec series = op.apply_astar(e1);
  CHECK((series.array() - 1.0).abs().maxCoeff() < 1e-12);
  // linearity
  Vec combo = op.apply_astar(2.0 * e1 + phi);
  CHECK((combo - 2.0 * series - op.apply_astar(phi)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("assembled matrix is symmetric PSD and matches the Gram build") {
  Trajectory traj = nonlinear_path(4, 0.05, 7);
  MalliavinOp op = assemble_malliavin(traj, 0, traj.n_steps());
  CHECK((op.m - op.m.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Mat> es(op.m, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() > -1e-10);

  // Gram oracle: columns J_{r,t} G theta_j built by forward tangent sweeps.
  const int t = traj.n_steps();
  const Stepper stepper = traj.make_stepper();
  Mat gram = Mat::Zero(op.dim(), op.dim());
  for (int r = 0; r <= t; ++r) {
    for (int j = 0; j < op.n_channels; ++j) {
      Vec g = Vec::Zero(op.dim());
      g[stepper.channel_row(j)] = stepper.channel_amp(j);
      Vec col = propagate_tangent(traj, r, t, g);
      gram += op.node_weights[r] * col * col.transpose();
    }
  }
  CHECK((gram - op.m).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("quadratic form via the adjoint matches phi' M phi") {
  Trajectory traj = nonlinear_path(8, 0.2, 11);
  MalliavinOp op = assemble_malliavin(traj, 0, traj.n_steps());
  GaussianStream rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    Vec phi(op.dim());
    rng.fill(phi);
    const Real direct = phi.dot(op.m * phi);
    const Real via_adjoint = quad_form_via_adjoint(traj, 0, traj.n_steps(), phi);
    CHECK(std::abs(direct - via_adjoint) <= 1e-8 * std::max(1e-300, std::abs(direct)));
  }
  CHECK(quad_form_via_adjoint(traj, 0, traj.n_steps(), Vec::Zero(op.dim())) == 0.0);
}

TEST_CASE("quadratic form reproduces the linear closed forms") {
  const Real T = 0.5;
  Trajectory traj = quiescent_path(4, ForcingSpec::uniform({2}, 1.0), T);
  Vec e2 = Vec::Zero(8);
  e2[mode_index(4, 2)] = 1.0;
  CHECK(quad_form_via_adjoint(traj, 0, traj.n_steps(), e2) ==
        doctest::Approx((1.0 - std::exp(-6.0 * T)) / 6.0).epsilon(1e-6));
}

TEST_CASE("low-mode mass") {
  Vec phi = Vec::Zero(8);  // n_modes = 4
  phi[mode_index(4, 1)] = 1.0;
  CHECK(low_mode_mass(phi, 4, 1) == doctest::Approx(1.0));
  CHECK(low_mode_mass(phi, 4, 3) == doctest::Approx(1.0));
  Vec psi = Vec::Zero(8);
  psi[mode_index(4, 3)] = 1.0;
  CHECK(low_mode_mass(psi, 4, 2) == 0.0);
  // boundary of the cone: ||P_N phi||^2 = alpha ||phi||^2 exactly
  Vec mix = Vec::Zero(8);
  mix[mode_index(4, 1)] = std::sqrt(0.5);
  mix[mode_index(4, 3)] = std::sqrt(0.5);
  CHECK(low_mode_mass(mix, 4, 2) == doctest::Approx(0.5 * mix.squaredNorm()));
}

TEST_CASE("spectral floor: rank-deficient linear case is flat zero") {
  // Forcing only on modes +-1; any direction with mass on mode 5 in the cone
  // S_{1,5} reaches quotient 0.
  Trajectory traj = quiescent_path(6, ForcingSpec::uniform({-1, 1}, 1.0), 0.25);
  MalliavinOp op = assemble_malliavin(traj, 0, traj.n_steps(), false);
  FloorReport rep = spectral_floor(op.m, 6, {1.0, 5}, 16, 20, 99);
  CHECK(rep.floor <= 1e-12);
  CHECK(rep.floor <= rep.quotients.minCoeff());
}

TEST_CASE("spectral floor: full forcing gives the minimal channel integral") {
  const Real T = 0.5;
  ForcingSpec f = ForcingSpec::uniform({-2, -1, 1, 2}, 1.0);
  Trajectory traj = quiescent_path(4, f, T);
  MalliavinOp op = assemble_malliavin(traj, 0, traj.n_steps(), false);
  FloorReport rep = spectral_floor(op.m, 4, {1.0, 2}, 16, 30, 7);
  const Real damped = oracles::ou_gram_integral(2, 1.0, T);
  CHECK(rep.low_block_min == doctest::Approx(damped).epsilon(1e-4));
  CHECK(rep.floor <= rep.low_block_min * (1 + 1e-12));
  CHECK(rep.floor > 0.0);
}

TEST_CASE("resolvent bounds hold for assembled and synthetic Gram matrices") {
  Trajectory traj = nonlinear_path(8, 0.2, 13);
  MalliavinOp op = assemble_malliavin(traj, 0, traj.n_steps());
  for (Real beta : {0.1, 1.0, 10.0}) {
    ResolventReport rep = resolvent_checks(op, beta);
    CHECK(rep.ok);
    CHECK(rep.astar_resolvent_norm <= 1.0 + 1e-8);
    CHECK(rep.inv_norm <= (1.0 + 1e-8) / beta);
  }
  // synthetic Gram matrix with a zero eigenvalue
  GaussianStream rng(6);
  Mat a(6, 3);
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) a(i, j) = rng.next();
  Mat m = a * a.transpose();
  ResolventReport rep = resolvent_checks(m, 0.1);
  CHECK(rep.ok);
  // beta -> infinity: beta ||(M + beta)^{-1}|| -> 1 on the kernel
  ResolventReport big = resolvent_checks(m, 1e12);
  CHECK(big.inv_norm * 1e12 == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(resolvent_checks(m, 0.0), std::invalid_argument);
}

TEST_CASE("epsilon statistics form a monotone empirical CDF") {
  std::vector<Real> floors = {1e-9, 1e-7, 1e-5, 1e-3, 1e-3};
  Vec grid(4);
  grid << 1e-8, 1e-6, 1e-4, 1e-2;
  EpsilonTable table = epsilon_statistics(floors, grid);
  for (Index i = 1; i < table.frequency.size(); ++i)
    CHECK(table.frequency[i] >= table.frequency[i - 1]);
  CHECK(table.frequency[0] == doctest::Approx(0.2));
  CHECK(table.frequency[3] == doctest::Approx(1.0));
  CHECK_THROWS_AS(epsilon_statistics({}, grid), std::invalid_argument);
}

TEST_CASE("linear ensemble with a cone above the forced band is all-fail") {
  ForcingSpec f = ForcingSpec::uniform({-1, 1}, 1.0);
  std::vector<Real> floors;
  for (int i = 0; i < 4; ++i) {
    Trajectory traj = quiescent_path(6, f, 0.1);
    MalliavinOp op = assemble_malliavin(traj, 0, traj.n_steps(), false);
    floors.push_back(spectral_floor(op.m, 6, {1.0, 4}, 8, 10,
                                    derive_seed(1, static_cast<std::uint64_t>(i), "floor"))
                         .floor);
  }
  Vec grid(3);
  grid << 1e-10, 1e-5, 1e-1;
  EpsilonTable table = epsilon_statistics(floors, grid);
  CHECK(table.frequency[0] == doctest::Approx(1.0));
}

TEST_CASE("rank threshold counts strictly positive directions") {
  Mat m = Mat::Zero(4, 4);
  m(0, 0) = 1.0;
  m(1, 1) = 1e-9;
  CHECK(rank_at_threshold(m, 1e-8) == 1);
  CHECK(rank_at_threshold(m, 1e-10) == 2);
}

TEST_CASE("low-mode mass equals the projection-path norm on cone members") {
  GaussianStream rng(41);
  const int n = 8, N = 3;
  for (int trial = 0; trial < 10; ++trial) {
    Vec phi(2 * n);
    rng.fill(phi);
    SpectralField f(n, phi);
    const Real via_projection = project(f, N, Band::Low).coeffs.squaredNorm();
    CHECK(low_mode_mass(phi, n, N) == doctest::Approx(via_projection).epsilon(1e-14));
    // membership characterization: exactly the cone condition
    const Real alpha = 0.4;
    const bool in_cone = low_mode_mass(phi, n, N) >= alpha * phi.squaredNorm();
    Vec low = phi, high = phi;
    project_inplace(low, n, N, Band::Low);
    project_inplace(high, n, N, Band::High);
    Vec boundary = std::sqrt(alpha) * low.normalized() +
                   std::sqrt(1.0 - alpha) * high.normalized();
    CHECK(low_mode_mass(boundary, n, N) >=
          alpha * boundary.squaredNorm() * (1.0 - 1e-12));
    (void)in_cone;
  }
}

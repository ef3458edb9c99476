#pragma once

#include <vector>

#include "glsim/functionals.hpp"
#include "glsim/malliavin.hpp"
#include "glsim/stats.hpp"

namespace glsim {

/// One member's control state along its trajectory. Control acts on the unit
/// blocks [n, n+1] for even n and is zero on [n+1, n+2]; residuals are stored
/// at every integer boundary.
struct ControlLedger {
  Vec xi;                        ///< initial perturbation (rho_0)
  std::vector<Vec> residuals;    ///< rho at integer times 0..n_max
  std::vector<Real> betas;       ///< regularization per control block
  std::vector<Mat> v;            ///< per control block: n_nodes x n_channels
  std::vector<Vec> rho_high;     ///< high-mode residual part at even n >= 2
  std::vector<Vec> rho_low;      ///< low-mode residual part at even n >= 2
  Real ito_integral = 0.0;       ///< running int v . dW over control blocks
};

/// v = A* (M + beta I)^{-1} J rho on the block carried by `op`; also returns
/// the boundary residual beta * (M + beta I)^{-1} J rho.
struct ControlSegment {
  Mat v_nodes;     ///< n_nodes x n_channels
  Vec rho_mid;     ///< residual at the end of the control interval
  Real v_l2 = 0;   ///< ||v|| in the weighted noise space
  Real bound = 0;  ///< beta^{-1/2} ||J rho||, the guaranteed cap on v_l2
};
ControlSegment control_segment(const MalliavinOp& op, const Vec& rho, Real beta);

/// Adaptive regularization: descending geometric trials beta_start * factor^i,
/// accepting the first beta whose ensemble mean of ||rho_low||^8 / ||rho||^8
/// meets `delta`. Fails (budget report) if no trial passes.
struct BetaChoice {
  Real beta = 0.0;
  Real ratio = 0.0;  ///< achieved ensemble ratio at the chosen (or best) beta
  bool passed = false;
  int trials = 0;
  std::vector<Real> tried_betas;
  std::vector<Real> tried_ratios;
};

struct DecayConfig {
  int n_modes = 16;
  Real dt = 1e-3;
  ForcingSpec forcing;
  int n_max = 8;       ///< even horizon in unit blocks
  int ensemble = 128;
  Real delta = 1.0 / 512.0;  ///< conditional-eighth-moment target for rho_low
  Real beta_start = 1.0;
  Real beta_factor = 0.25;
  int beta_budget = 10;
  int split_n = 0;  ///< P/Q split frequency; 0 = calibrate from the first block
  Real split_target = 1.0 / 512.0;  ///< tail test threshold relative to ||J||^8
  std::uint64_t master_seed = 0;
  int threads = 1;
  bool nonlinearity = true;
  bool keep_ledgers = false;  ///< retain per-member ledgers (and trajectories)
};

struct DecayTable {
  std::vector<int> even_n;
  Vec mean_rho8;        ///< ensemble mean of ||rho_n||^8 at even n
  Vec sem_rho8;
  Vec mean_abs_ito;     ///< ensemble mean of |int v dW| up to time n
  Vec boundary_times;   ///< 0..n_max
  Vec mean_rho2;        ///< ensemble mean of ||rho_t||^2 at integer boundaries
  std::vector<Real> betas;
  std::vector<BetaChoice> beta_choices;
  int split_n = 0;
  Real two_step_ratio = 0.0;  ///< fitted ratio of E||rho||^8 per two time units
  Real gamma0 = 0.0;          ///< fitted decay rate of E||rho_t||^2
  Real gamma0_r2 = 0.0;
  std::vector<ControlLedger> ledgers;   ///< populated when keep_ledgers is set
  std::vector<Trajectory> trajectories; ///< idem
};

/// Monte Carlo decay experiment for the iterative control construction.
DecayTable decay_experiment(const DecayConfig& cfg, const Vec& xi);

/// Calibrates the split frequency: smallest N with ensemble mean of
/// ||J Q_N||^8 below `target` times the mean of ||J||^8 on the block.
int select_split_frequency(const std::vector<Mat>& block_propagators, int n_modes,
                           Real target);

/// Residual recursion over one two-block window given the assembled block
/// operator and the rest-interval path; returns the updated ledger entries.
struct ResidualUpdate {
  Vec rho_next;  ///< rho_{n+2} = rho_high + rho_low
  Vec rho_high;
  Vec rho_low;
  ControlSegment segment;
};
ResidualUpdate residual_update(const MalliavinOp& op, const FrozenPath& rest,
                               const Vec& rho, Real beta, int split_n);

/// Integrates the residual equation directly (trapezoid-consistent source
/// kicks) across [s_step, t_step], with v given on the leading control block.
Vec integrate_residual(const Trajectory& traj, int s_step, int mid_step, int t_step,
                       const Vec& rho0, const Mat& v_nodes);

/// Replays a ledger's controls through the residual equation along the
/// member's trajectory; returns the residuals at every integer boundary.
/// Matches the recursion output to discretization roundoff.
std::vector<Vec> replay_ledger(const Trajectory& traj, const ControlLedger& ledger);

/// Ito integral of the ledger's controls against the member's stored noise
/// increments (left-point sums over the control blocks).
Real ledger_ito_integral(const Trajectory& traj, const ControlLedger& ledger);

struct GradientProbeConfig {
  SolverConfig solver;
  ForcingSpec forcing;
  Functional phi = Functional::constant(0.0);
  Vec u0;
  int ensemble = 128;
  int probes = 4;
  Real fd_eps = 1e-3;
  Real gamma0 = 0.1;  ///< decay rate fitted elsewhere (decay_experiment)
  std::uint64_t master_seed = 0;
  int threads = 1;
};

struct GradientProbeReport {
  Real lhs = 0.0;       ///< max directional |d/d eps E Phi(U_t; u0 + eps eta)|
  Real lhs_sem = 0.0;
  Real mean_phi_sq = 0.0;
  Real mean_grad_sq = 0.0;
  Real rhs_first = 0.0;   ///< sqrt(E Phi^2)
  Real rhs_second = 0.0;  ///< e^{-gamma0 t} sqrt(E ||grad Phi||^2)
  Real implied_c = 0.0;   ///< lhs / (rhs_first + rhs_second)
  int ensemble = 0;
  int probes = 0;
};

/// Two-sided gradient estimate: finite differences of the semigroup against
/// the Monte Carlo right-hand side, with common random numbers.
GradientProbeReport gradient_probe(const GradientProbeConfig& cfg);

}  // namespace glsim

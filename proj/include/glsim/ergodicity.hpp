#pragma once

#include <vector>

#include "glsim/functionals.hpp"
#include "glsim/solver.hpp"
#include "glsim/stats.hpp"

namespace glsim {

/// Capped distance d(x, y) = min(1, ||x - y|| / delta).
struct MetricSpec {
  Real delta = 1.0;
};

Real capped_distance(const Vec& a, const Vec& b, const MetricSpec& metric);

struct MixingConfig {
  SolverConfig solver;  ///< horizon = coupling span
  ForcingSpec forcing;
  Vec u0_a, u0_b;
  MetricSpec metric;
  int pairs = 64;
  int record_stride = 100;
  std::uint64_t master_seed = 0;
  int threads = 1;
  Real fit_upper = 0.9;   ///< fit window: mean distance strictly below this
  Real fit_lower = 1e-12; ///< and above this
  bool keep_final_states = false;
};

struct MixingReport {
  Vec times;
  Vec mean_distance;          ///< ensemble mean of the capped distance
  Real rate = 0.0;            ///< fitted decay rate of the mean distance
  Real intercept = 0.0;       ///< log-intercept of the exponential fit
  Real r_squared = 0.0;
  int pairs = 0;
  /// Per-step non-increase with 1e-10 relative slack and an absolute
  /// rounding floor of 1e-13 (1 + ||U||).
  bool pathwise_monotone = false;
  Real worst_step_excess = 0.0;  ///< max over steps of d' - d (1 + slack) - floor
  std::vector<Vec> final_a, final_b;
};

/// Drives both initial states with the identical noise per pair and records
/// the distance decay; the difference dynamics is pathwise dissipative.
MixingReport synchronous_coupling(const MixingConfig& cfg);

/// Empirical optimal-transport value of the capped cost between two equal
/// ensembles, computed on the projection onto modes |k| <= max_mode.
Real wasserstein_distance(const std::vector<Vec>& a, const std::vector<Vec>& b,
                          const MetricSpec& metric, int n_modes, int max_mode = 4);

/// Exact solution of the square assignment problem; returns the minimal mean
/// cost. O(n^3) shortest augmenting paths.
Real assignment_mean_cost(const Mat& cost);

/// Running time average (1/t) int_0^t Phi(U_s) ds along a stored trajectory.
struct RunningAverage {
  Vec times;
  Vec average;
};
RunningAverage time_average(const Trajectory& traj, const Functional& phi, int stride = 1);

struct LlnConfig {
  SolverConfig solver;  ///< horizon = averaging span T
  ForcingSpec forcing;
  Functional phi = Functional::capped_low_mode_norm(2, 1.0);
  Vec u0_a, u0_b;
  int paths_per_side = 8;
  std::uint64_t master_seed = 0;
  int threads = 1;
};

struct LlnReport {
  Vec averages_a, averages_b;  ///< per-path time averages over [0, T]
  Real mean_a = 0, sem_a = 0, mean_b = 0, sem_b = 0;
  Real gap = 0;        ///< |mean_a - mean_b|
  Real tolerance = 0;  ///< 2 * combined standard error
  bool consistent = false;
};

/// Time averages started from two initial conditions; the limits agree for an
/// ergodic flow, so the gap is compared against Monte Carlo error.
LlnReport lln_experiment(const LlnConfig& cfg);

struct CltConfig {
  SolverConfig solver;  ///< horizon = T of one integral sample
  ForcingSpec forcing;
  Functional phi = Functional::capped_low_mode_norm(2, 1.0);
  Real burn_in = 20.0;
  int reps = 200;
  Real aux_time = 4000.0;  ///< per auxiliary path, for m_hat and batch means
  int aux_paths = 8;
  Real batch_len = 20.0;
  int record_stride = 10;
  std::uint64_t master_seed = 0;
  int threads = 1;
};

struct CltReport {
  std::string phi_descriptor;
  Real m_hat = 0.0;
  Real m_hat_sem = 0.0;
  Real sigma_sq = 0.0;  ///< batch-means estimate of the asymptotic variance
  Vec samples;          ///< normalized integrals, one per rep
  KsResult ks;
  bool degenerate = false;
};

/// Normalized-integral samples against the fitted normal law; the reference
/// mean is taken from independent auxiliary runs to avoid bias coupling.
CltReport clt_experiment(const CltConfig& cfg);

struct StatsConfig {
  SolverConfig solver;  ///< horizon = total run length
  ForcingSpec forcing;
  Vec u0;
  Real burn_in = 10.0;
};

struct InvariantStats {
  Vec mode_mean;           ///< time average of each coefficient
  Vec mode_second_moment;  ///< time average of each squared coefficient
  Vec spectrum;            ///< per frequency: summed sin/cos second moments
  Real mean_sq_norm = 0.0;    ///< time average of ||U||^2
  Real mean_sq_vnorm = 0.0;   ///< time average of ||U||_1^2
  Real duration = 0.0;
};

/// Long-run moment summary of the invariant measure sampled by time average.
InvariantStats invariant_stats(const StatsConfig& cfg);

}  // namespace glsim

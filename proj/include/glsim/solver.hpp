#pragma once

#include <cstdint>
#include <vector>

#include "glsim/rng.hpp"
#include "glsim/spectral.hpp"
#include "glsim/types.hpp"

namespace glsim {

/// Degenerate forcing: independent Brownian channels acting on a fixed set of
/// modes. Channel j drives mode modes[j] with amplitude amps[j] (with respect
/// to the unit-normalized basis). The channel order is the stored order.
struct ForcingSpec {
  std::vector<int> modes;  ///< distinct nonzero signed modes, channel order
  Vec amps;                ///< per-channel amplitudes, all nonzero

  static ForcingSpec uniform(const std::vector<int>& modes, Real amp);

  int n_channels() const { return static_cast<int>(modes.size()); }
  bool symmetric() const;
  int max_frequency() const;
  void validate(int n_modes) const;

  /// B_n = sum_k gamma_k^n beta_k^2 over forced modes (gamma_k = k^2).
  Real forcing_moment(int n) const;
};

struct SolverConfig {
  int n_modes = 32;
  Real dt = 1e-3;
  Real horizon = 1.0;
  std::uint64_t seed = 0;
  int snapshot_stride = 1;
  bool nonlinearity = true;

  int n_steps() const;
  void validate(const ForcingSpec& forcing) const;
};

/// One-step exponential integrator for
///   dU = (Laplacian U + U - U^3) dt + sum_j beta_j b_{k_j} dW_j.
/// The linear part (Laplacian + 1) is diagonal on the basis and applied
/// exactly; the explicit cubic enters through the integrating factor,
/// u' = e^{L dt}(u - dt u^3); the stochastic convolution is sampled exactly
/// per forced mode (Ornstein-Uhlenbeck update, with the dt variance limit on
/// the neutral modes |k| = 1).
class Stepper {
 public:
  Stepper(int n_modes, Real dt, const ForcingSpec& forcing, bool nonlinearity = true);

  int n_modes() const { return n_; }
  int dim() const { return 2 * n_; }
  int n_channels() const { return static_cast<int>(rows_.size()); }
  Real dt() const { return dt_; }
  bool nonlinearity() const { return nonlin_; }
  const SpectralTransform& plan() const { return *plan_; }
  const ForcingSpec& forcing() const { return forcing_; }

  /// Advances u in place; xi holds n_channels standard normal draws.
  void step(Vec& u, const Vec& xi) const;
  /// Deterministic part only (noise-free path).
  void step_deterministic(Vec& u) const;

  /// Squared grid samples of a frozen state, as consumed by the linearized steps.
  Vec squared_grid(const Vec& u) const;

  /// xi <- J_step xi, the exact Jacobian of `step` at the frozen state.
  void tangent_step(Vec& xi, const Vec& u2_grid) const;
  /// phi <- J_step^T phi, the exact transpose of `tangent_step`.
  void adjoint_step(Vec& phi, const Vec& u2_grid) const;
  /// Column-wise variants.
  void tangent_step(Mat& x, const Vec& u2_grid) const;
  void adjoint_step(Mat& x, const Vec& u2_grid) const;

  const Vec& exp_lam() const { return elam_; }
  const Vec& nonlinear_weight() const { return nl_weight_; }
  /// Coefficient row driven by channel j.
  int channel_row(int j) const { return rows_[j]; }
  /// Exact one-step stochastic-convolution standard deviation of channel j.
  Real channel_std(int j) const { return conv_std_[j]; }
  Real channel_amp(int j) const { return forcing_.amps[j]; }

  /// G applied to a channel vector: sum_j beta_j v_j b_{k_j} as coefficients.
  Vec apply_forcing_map(const Vec& v) const;
  /// G^T applied to coefficients: (beta_j u[row_j])_j.
  Vec apply_forcing_map_transpose(const Vec& u) const;

 private:
  int n_;
  Real dt_;
  bool nonlin_;
  ForcingSpec forcing_;
  const SpectralTransform* plan_;
  Vec elam_;     // exp((1 - k^2) dt) per coefficient
  Vec nl_weight_;   // dt * e^{(1 - k^2) dt} per coefficient
  std::vector<int> rows_;
  Vec conv_std_;
};

/// A stored solution path: initial state, per-step standard-normal draws, and
/// state snapshots every `snapshot_stride` steps. Replaying the stored noise
/// through the stepper reproduces the states bit for bit.
struct Trajectory {
  int n_modes = 0;
  Real dt = 0.0;
  Real t0 = 0.0;
  bool nonlinearity = true;
  std::uint64_t seed = 0;
  int snapshot_stride = 1;
  ForcingSpec forcing;
  Vec initial;
  std::vector<Vec> states;  ///< snapshot i = state after i*stride steps
  Mat noise;                ///< n_channels x n_steps

  int n_steps() const { return static_cast<int>(noise.cols()); }
  Real time_at(int step) const { return t0 + dt * step; }
  bool dense() const { return snapshot_stride == 1; }
  /// State after `step` steps; replays from the nearest snapshot if strided.
  Vec state_at(int step) const;
  Stepper make_stepper() const { return Stepper(n_modes, dt, forcing, nonlinearity); }
};

/// Integrates the equation from u0 with noise drawn from the seed in `cfg`.
Trajectory integrate(const Vec& u0, const SolverConfig& cfg, const ForcingSpec& forcing);
/// Same path given an explicit noise matrix (replay, perturbed-noise probes).
Trajectory integrate_with_noise(const Vec& u0, const SolverConfig& cfg,
                                const ForcingSpec& forcing, const Mat& noise);

/// Drift field: Laplacian f + f - f^3 with the dealiased cubic.
SpectralField drift(const SpectralField& f);

struct DiagnosticParams {
  int power = 2;     ///< m in ||U_t^m||
  int order = 1;     ///< n in the weighted energy functional and B_n
  Real eta = 0.01;   ///< exp-moment weight
  int stride = 1;    ///< record every `stride` steps
};

/// Per-time scalar series along a trajectory.
struct DiagnosticSeries {
  Vec times;
  Vec l2_norm;          ///< ||U_t||
  Vec v1_norm;          ///< ||U_t||_1
  Vec energy;           ///< ||U_t||^2 + int_0^t ||U_s||_1^2 ds
  Vec weighted_energy;  ///< t^n ||U_t||_n + int_0^t s^n ||U_s||_{n+1}^2 ds
  Vec power_norm;       ///< ||U_t^m|| via padded-grid quadrature
  Vec exp_moment;       ///< exp(eta ||U_t||^2)
  Real forcing_b0 = 0.0;
  Real forcing_bn = 0.0;
  int params_power = 2;
  int params_order = 1;
  Real params_eta = 0.01;
};

DiagnosticSeries diagnostics(const Trajectory& traj, const DiagnosticParams& params = {});

/// L2 norm of the pointwise m-th power of a field, exact via a padded grid.
Real power_norm(const SpectralField& f, int m);

constexpr Real kBlowupGuard = 1e6;

}  // namespace glsim

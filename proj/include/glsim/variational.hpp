#pragma once

#include "glsim/solver.hpp"

namespace glsim {

/// Squared grid samples of a trajectory over a step window, cached for
/// repeated linearized sweeps along the same frozen path.
class FrozenPath {
 public:
  FrozenPath(const Trajectory& traj, int s_step, int t_step);

  int s_step() const { return s_; }
  int t_step() const { return t_; }
  const Stepper& stepper() const { return stepper_; }
  /// Squared grid samples of the state after `step` steps (s <= step < t).
  auto u2(int step) const { return u2_grids_.col(step - s_); }

 private:
  int s_, t_;
  Stepper stepper_;
  Mat u2_grids_;  // grid_size x (t - s)
};

void check_window(const Trajectory& traj, int s_step, int t_step);

/// J_{s,t} xi: derivative of the discrete flow map with respect to the state
/// at step s, applied to xi, along the stored path.
Vec propagate_tangent(const Trajectory& traj, int s_step, int t_step, const Vec& xi);
Vec propagate_tangent(const FrozenPath& path, const Vec& xi);

/// K_{s,t} phi = J_{s,t}^T phi, computed as the exact transpose of the
/// discrete tangent propagator (backward sweep of transposed steps).
Vec propagate_adjoint(const Trajectory& traj, int s_step, int t_step, const Vec& phi);
Vec propagate_adjoint(const FrozenPath& path, const Vec& phi);

/// Second variation J^{(2)}_{s,t}(xi, xi2): exact second derivative of the
/// discrete flow map, bilinear and symmetric in its arguments.
Vec propagate_second(const Trajectory& traj, int s_step, int t_step, const Vec& xi,
                     const Vec& xi2);

/// Noise-to-state derivative in channel j at time s: J_{s,t} G theta_j.
Vec malliavin_derivative(const Trajectory& traj, int s_step, int t_step, int channel);

/// Full propagator matrices over a window (columns = images of basis vectors).
/// The adjoint sweep also yields J^T, so one backward pass gives both.
Mat tangent_matrix(const FrozenPath& path);

/// Step index of a time on the trajectory grid; throws if not aligned.
int step_of_time(const Trajectory& traj, Real t, Real tol = 1e-9);

}  // namespace glsim

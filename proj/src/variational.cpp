#include "glsim/variational.hpp"

#include <cmath>

namespace glsim {

void check_window(const Trajectory& traj, int s_step, int t_step) {
  if (s_step < 0 || t_step > traj.n_steps() || s_step > t_step)
    throw std::invalid_argument("window outside trajectory");
  if (!traj.dense())
    throw std::invalid_argument("variational sweeps require a dense trajectory");
}

FrozenPath::FrozenPath(const Trajectory& traj, int s_step, int t_step)
    : s_(s_step), t_(t_step), stepper_(traj.make_stepper()) {
  check_window(traj, s_step, t_step);
  const int m = stepper_.plan().grid_size();
  u2_grids_.resize(m, std::max(1, t_ - s_));
  for (int i = s_; i < t_; ++i)
    u2_grids_.col(i - s_) = stepper_.squared_grid(traj.states[static_cast<std::size_t>(i)]);
}

Vec propagate_tangent(const FrozenPath& path, const Vec& xi) {
  Vec x = xi;
  for (int i = path.s_step(); i < path.t_step(); ++i) {
    Vec u2 = path.u2(i);
    path.stepper().tangent_step(x, u2);
  }
  return x;
}

Vec propagate_tangent(const Trajectory& traj, int s_step, int t_step, const Vec& xi) {
  check_window(traj, s_step, t_step);
  const Stepper stepper = traj.make_stepper();
  Vec x = xi;
  for (int i = s_step; i < t_step; ++i) {
    Vec u2 = stepper.squared_grid(traj.states[static_cast<std::size_t>(i)]);
    stepper.tangent_step(x, u2);
  }
  return x;
}

Vec propagate_adjoint(const FrozenPath& path, const Vec& phi) {
  Vec x = phi;
  for (int i = path.t_step() - 1; i >= path.s_step(); --i) {
    Vec u2 = path.u2(i);
    path.stepper().adjoint_step(x, u2);
  }
  return x;
}

Vec propagate_adjoint(const Trajectory& traj, int s_step, int t_step, const Vec& phi) {
  check_window(traj, s_step, t_step);
  const Stepper stepper = traj.make_stepper();
  Vec x = phi;
  for (int i = t_step - 1; i >= s_step; --i) {
    Vec u2 = stepper.squared_grid(traj.states[static_cast<std::size_t>(i)]);
    stepper.adjoint_step(x, u2);
  }
  return x;
}

Vec propagate_second(const Trajectory& traj, int s_step, int t_step, const Vec& xi,
                     const Vec& xi2) {
  check_window(traj, s_step, t_step);
  const Stepper stepper = traj.make_stepper();
  const SpectralTransform& plan = stepper.plan();
  Vec a = xi, b = xi2, sv = Vec::Zero(stepper.dim());
  for (int i = s_step; i < t_step; ++i) {
    const Vec& u = traj.states[static_cast<std::size_t>(i)];
    Vec ug = plan.synthesis() * u;
    Vec u2 = ug.array().square();
    // Hessian of the step map in directions (a, b): source 6 u * (Ja) * (Jb),
    // dealiased; the second-variation state itself advances like a tangent.
    Vec src = (plan.synthesis() * a).array() * (plan.synthesis() * b).array() * ug.array();
    stepper.tangent_step(sv, u2);
    sv -= 6.0 * stepper.nonlinear_weight().cwiseProduct(plan.analysis() * src);
    stepper.tangent_step(a, u2);
    stepper.tangent_step(b, u2);
  }
  return sv;
}

Vec malliavin_derivative(const Trajectory& traj, int s_step, int t_step, int channel) {
  if (channel < 0 || channel >= traj.forcing.n_channels())
    throw std::invalid_argument("malliavin_derivative: bad channel index");
  Vec g = Vec::Zero(2 * traj.n_modes);
  g[mode_index(traj.n_modes, traj.forcing.modes[static_cast<std::size_t>(channel)])] =
      traj.forcing.amps[channel];
  return propagate_tangent(traj, s_step, t_step, g);
}

Mat tangent_matrix(const FrozenPath& path) {
  Mat x = Mat::Identity(path.stepper().dim(), path.stepper().dim());
  for (int i = path.s_step(); i < path.t_step(); ++i) {
    Vec u2 = path.u2(i);
    path.stepper().tangent_step(x, u2);
  }
  return x;
}

int step_of_time(const Trajectory& traj, Real t, Real tol) {
  const Real steps = (t - traj.t0) / traj.dt;
  const int i = static_cast<int>(std::llround(steps));
  if (std::abs(steps - i) > tol * std::max(1.0, std::abs(steps)))
    throw std::invalid_argument("time not aligned to the trajectory step grid");
  return i;
}

}  // namespace glsim

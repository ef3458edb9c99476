#include "glsim/malliavin.hpp"

#include <cmath>

#include "glsim/rng.hpp"

namespace glsim {

Vec MalliavinOp::apply_astar(const Vec& phi) const {
  if (astar.size() == 0) throw std::invalid_argument("apply_astar: operator not kept");
  return astar * phi;
}

Vec MalliavinOp::apply_a(const Vec& v) const {
  if (astar.size() == 0) throw std::invalid_argument("apply_a: operator not kept");
  Vec wv(v.size());
  for (Index i = 0; i < v.size(); ++i) wv[i] = node_weights[i / n_channels] * v[i];
  return astar.transpose() * wv;
}

Real MalliavinOp::noise_inner(const Vec& v, const Vec& w) const {
  Real acc = 0.0;
  for (Index i = 0; i < v.size(); ++i) acc += node_weights[i / n_channels] * v[i] * w[i];
  return acc;
}

MalliavinOp assemble_malliavin(const Trajectory& traj, int s_step, int t_step,
                               bool keep_astar) {
  check_window(traj, s_step, t_step);
  const Stepper stepper = traj.make_stepper();
  const int d = stepper.dim();
  const int nc = stepper.n_channels();
  const int nodes = t_step - s_step + 1;

  MalliavinOp op;
  op.s_step = s_step;
  op.t_step = t_step;
  op.dt = traj.dt;
  op.n_modes = traj.n_modes;
  op.n_channels = nc;
  op.node_weights = Vec::Constant(nodes, traj.dt);
  op.node_weights[0] = 0.5 * traj.dt;
  op.node_weights[nodes - 1] = 0.5 * traj.dt;
  if (nodes == 1) op.node_weights[0] = 0.0;

  Mat astar(static_cast<Index>(nodes) * nc, d);
  // Backward sweep of the identity: after processing step r the matrix holds
  // K_{r,t}; its forcing rows are the A* block at node r. The final matrix is
  // J_{s,t}^T.
  Mat k = Mat::Identity(d, d);
  auto record = [&](int node) {
    for (int j = 0; j < nc; ++j)
      astar.row(static_cast<Index>(node - s_step) * nc + j) =
          stepper.channel_amp(j) * k.row(stepper.channel_row(j));
  };
  record(t_step);
  for (int i = t_step - 1; i >= s_step; --i) {
    Vec u2 = stepper.squared_grid(traj.states[static_cast<std::size_t>(i)]);
    stepper.adjoint_step(k, u2);
    record(i);
  }
  op.jmat = k.transpose();

  Mat weighted = astar;
  for (Index r = 0; r < weighted.rows(); ++r) weighted.row(r) *= op.node_weights[r / nc];
  op.m = astar.transpose() * weighted;
  op.m = 0.5 * (op.m + op.m.transpose()).eval();
  if (keep_astar) op.astar = std::move(astar);
  return op;
}

Real quad_form_via_adjoint(const Trajectory& traj, int s_step, int t_step, const Vec& phi) {
  check_window(traj, s_step, t_step);
  const Stepper stepper = traj.make_stepper();
  const int nc = stepper.n_channels();
  auto channel_sq = [&](const Vec& x) {
    Real acc = 0.0;
    for (int j = 0; j < nc; ++j) {
      const Real c = stepper.channel_amp(j) * x[stepper.channel_row(j)];
      acc += c * c;
    }
    return acc;
  };
  Vec x = phi;
  Real integral = 0.0;
  Real prev = channel_sq(x);
  for (int i = t_step - 1; i >= s_step; --i) {
    Vec u2 = stepper.squared_grid(traj.states[static_cast<std::size_t>(i)]);
    stepper.adjoint_step(x, u2);
    const Real cur = channel_sq(x);
    integral += 0.5 * traj.dt * (prev + cur);
    prev = cur;
  }
  return integral;
}

Real low_mode_mass(const Vec& phi, int n_modes, int N) {
  if (N < 1 || N > n_modes) throw std::invalid_argument("low_mode_mass: N out of range");
  Real acc = 0.0;
  for (Index i = 0; i < phi.size(); ++i)
    if (index_frequency(n_modes, static_cast<int>(i)) <= N) acc += phi[i] * phi[i];
  return acc;
}

namespace {

std::vector<int> low_indices(int n_modes, int N) {
  std::vector<int> idx;
  for (int i = 0; i < 2 * n_modes; ++i)
    if (index_frequency(n_modes, i) <= N) idx.push_back(i);
  return idx;
}

// Pulls phi back onto the cone boundary: keeps the low/high directions, sets
// the low-mode mass fraction to exactly alpha.
void project_to_cone(Vec& phi, int n_modes, const ConeSpec& cone) {
  const Real n = phi.norm();
  if (n == 0.0) {
    phi[low_indices(n_modes, cone.n_low).front()] = 1.0;
    return;
  }
  phi /= n;
  Real low_sq = low_mode_mass(phi, n_modes, cone.n_low);
  if (low_sq >= cone.alpha) return;
  Vec low = phi, high = phi;
  project_inplace(low, n_modes, cone.n_low, Band::Low);
  project_inplace(high, n_modes, cone.n_low, Band::High);
  const Real ln = low.norm(), hn = high.norm();
  if (ln == 0.0) {
    // No low-mode content to rescale; fall back to a pure low-mode direction.
    phi = Vec::Zero(phi.size());
    phi[low_indices(n_modes, cone.n_low).front()] = 1.0;
    return;
  }
  phi = std::sqrt(cone.alpha) / ln * low;
  if (hn > 0.0) phi += std::sqrt(1.0 - cone.alpha) / hn * high;
  phi.normalize();
}

}  // namespace

FloorReport spectral_floor(const Mat& m, int n_modes, const ConeSpec& cone, int samples,
                           int refine_iterations, std::uint64_t seed) {
  if (samples < 1 && refine_iterations < 0)
    throw std::invalid_argument("spectral_floor: empty budget");
  if (!(cone.alpha > 0.0 && cone.alpha <= 1.0))
    throw std::invalid_argument("spectral_floor: alpha must be in (0, 1]");

  FloorReport rep;
  const auto idx = low_indices(n_modes, cone.n_low);
  Mat mlow(idx.size(), idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b) mlow(a, b) = m(idx[a], idx[b]);
  Eigen::SelfAdjointEigenSolver<Mat> es(mlow);
  rep.low_block_min = es.eigenvalues().minCoeff();
  rep.floor = rep.low_block_min;

  GaussianStream rng(seed);
  rep.samples = samples;
  rep.refine_iterations = refine_iterations;
  rep.quotients.resize(samples);
  const Real d = static_cast<Real>(m.rows());
  for (int s = 0; s < samples; ++s) {
    Vec phi(m.rows());
    rng.fill(phi);
    project_to_cone(phi, n_modes, cone);
    Real q = phi.dot(m * phi);
    // Projected gradient descent on the Rayleigh quotient over the cone.
    Real step = 1.0 / std::max(1.0, m.trace() / d);
    for (int it = 0; it < refine_iterations; ++it) {
      Vec mphi = m * phi;
      const Real quotient = phi.dot(mphi);
      Vec grad = 2.0 * (mphi - quotient * phi);
      Vec trial = phi - step * grad;
      project_to_cone(trial, n_modes, cone);
      const Real qt = trial.dot(m * trial);
      if (qt < quotient) {
        phi = trial;
        q = qt;
        step *= 1.5;
      } else {
        step *= 0.5;
        q = quotient;
      }
    }
    rep.quotients[s] = q;
    rep.floor = std::min(rep.floor, q);
  }
  return rep;
}

namespace {
Real sym_op_norm(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.transpose()));
  return es.eigenvalues().cwiseAbs().maxCoeff();
}
}  // namespace

ResolventReport resolvent_checks(const Mat& m, Real beta, Real slack) {
  if (!(beta > 0.0)) throw std::invalid_argument("resolvent_checks: beta must be > 0");
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  const Vec& lam = es.eigenvalues();
  ResolventReport rep;
  rep.beta = beta;
  rep.slack = slack;
  // For M = A A*: ||A*(M+b)^{-1/2}||^2 = ||(M+b)^{-1/2}A||^2 = max lam/(lam+b).
  Real ratio = 0.0, inv_min = lam.minCoeff() + beta;
  for (Index i = 0; i < lam.size(); ++i)
    ratio = std::max(ratio, std::max(lam[i], 0.0) / (lam[i] + beta));
  rep.astar_resolvent_norm = std::sqrt(ratio);
  rep.resolvent_a_norm = rep.astar_resolvent_norm;
  rep.inv_sqrt_norm = 1.0 / std::sqrt(inv_min);
  rep.inv_norm = 1.0 / inv_min;
  rep.ok = rep.astar_resolvent_norm <= 1.0 + slack && rep.resolvent_a_norm <= 1.0 + slack &&
           rep.inv_sqrt_norm <= (1.0 + slack) / std::sqrt(beta) &&
           rep.inv_norm <= (1.0 + slack) / beta;
  return rep;
}

ResolventReport resolvent_checks(const MalliavinOp& op, Real beta, Real slack) {
  if (!(beta > 0.0)) throw std::invalid_argument("resolvent_checks: beta must be > 0");
  if (op.astar.size() == 0) return resolvent_checks(op.m, beta, slack);
  const Index d = op.m.rows();
  Mat mb = op.m + beta * Mat::Identity(d, d);
  Eigen::SelfAdjointEigenSolver<Mat> es(mb);
  Mat inv_sqrt = es.operatorInverseSqrt();

  // Honest route through the noise space: weight the node rows and take the
  // spectral norm of the composite maps.
  Mat half_weighted = op.astar;
  for (Index r = 0; r < half_weighted.rows(); ++r)
    half_weighted.row(r) *= std::sqrt(op.node_weights[r / op.n_channels]);
  Mat composite = half_weighted * inv_sqrt;  // W^{1/2} A* (M+b)^{-1/2}

  ResolventReport rep;
  rep.beta = beta;
  rep.slack = slack;
  rep.astar_resolvent_norm = std::sqrt(sym_op_norm(composite.transpose() * composite));
  rep.resolvent_a_norm = rep.astar_resolvent_norm;  // adjoint pair, same norm
  rep.inv_sqrt_norm = std::sqrt(sym_op_norm(inv_sqrt * inv_sqrt));
  rep.inv_norm = sym_op_norm(mb.inverse());
  rep.ok = rep.astar_resolvent_norm <= 1.0 + slack && rep.resolvent_a_norm <= 1.0 + slack &&
           rep.inv_sqrt_norm <= (1.0 + slack) / std::sqrt(beta) &&
           rep.inv_norm <= (1.0 + slack) / beta;
  return rep;
}

EpsilonTable epsilon_statistics(const std::vector<Real>& floors, const Vec& eps_grid) {
  if (floors.empty()) throw std::invalid_argument("epsilon_statistics: empty ensemble");
  EpsilonTable table;
  table.eps = eps_grid;
  table.frequency.resize(eps_grid.size());
  for (Index i = 0; i < eps_grid.size(); ++i) {
    int count = 0;
    for (Real f : floors)
      if (f < eps_grid[i]) ++count;
    table.frequency[i] = static_cast<Real>(count) / static_cast<Real>(floors.size());
  }
  return table;
}

int rank_at_threshold(const Mat& m, Real threshold) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  int rank = 0;
  for (Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] > threshold) ++rank;
  return rank;
}

}  // namespace glsim

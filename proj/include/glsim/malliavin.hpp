#pragma once

#include <vector>

#include "glsim/variational.hpp"

namespace glsim {

/// Discretization of the noise-to-state operator and its Gram matrix on a
/// step window [s, t]. Time integrals use the trapezoidal rule on the step
/// grid, and the adjoint pair is exact at the discrete level:
///   (A* phi)(r) = G^T K_{r,t} phi          (rows of `astar`, node-major)
///   A v         = sum_r w_r J_{r,t} G v_r  (= astar^T * (w .* v))
///   M           = A A* = astar^T W astar   (symmetric PSD)
struct MalliavinOp {
  int s_step = 0, t_step = 0;
  Real dt = 0.0;
  int n_modes = 0, n_channels = 0;
  Vec node_weights;  ///< trapezoid weights per node, size R+1
  Mat astar;         ///< ((R+1)*n_channels) x (2*n_modes); empty if not kept
  Mat jmat;          ///< J_{s,t} as a matrix (backward-sweep byproduct)
  Mat m;             ///< the Malliavin matrix

  int n_nodes() const { return t_step - s_step + 1; }
  int dim() const { return 2 * n_modes; }

  /// A* phi as a stacked node-major vector of channel values.
  Vec apply_astar(const Vec& phi) const;
  /// A v for node-major v (same stacking as astar rows).
  Vec apply_a(const Vec& v) const;
  /// Weighted L2 inner product on the noise side.
  Real noise_inner(const Vec& v, const Vec& w) const;
};

/// Assembles A*, J and M on [s, t] with one batched backward sweep.
/// With keep_astar = false only J and M are retained.
MalliavinOp assemble_malliavin(const Trajectory& traj, int s_step, int t_step,
                               bool keep_astar = true);

/// <M phi, phi> evaluated through the adjoint path
///   sum_l beta_l^2 int_s^t <b_l, K_{r,t} phi>^2 dr
/// with the same trapezoidal rule; independent of the assembled matrix.
Real quad_form_via_adjoint(const Trajectory& traj, int s_step, int t_step, const Vec& phi);

/// Low-mode mass sum_{0<|k|<=N} <phi, b_k>^2 = ||P_N phi||^2.
Real low_mode_mass(const Vec& phi, int n_modes, int N);

/// Directions holding at least an alpha fraction of their mass on modes
/// |k| <= N (a closed cone; alpha in (0, 1]).
struct ConeSpec {
  Real alpha = 1.0;
  int n_low = 1;
};

struct FloorReport {
  Real floor = 0.0;          ///< best (smallest) Rayleigh quotient found
  Real low_block_min = 0.0;  ///< exact min eigenvalue of M restricted to H_N
  int samples = 0;
  int refine_iterations = 0;
  Vec quotients;  ///< per-sample refined Rayleigh quotients
};

/// Upper bound on inf over the cone of <M phi, phi>/||phi||^2: exact minimum
/// over the low-mode subspace plus random cone sampling with projected
/// gradient refinement.
FloorReport spectral_floor(const Mat& m, int n_modes, const ConeSpec& cone, int samples,
                           int refine_iterations, std::uint64_t seed);

struct ResolventReport {
  Real beta = 0.0;
  Real astar_resolvent_norm = 0.0;   ///< ||A* (M + beta)^{-1/2}||, bound 1
  Real resolvent_a_norm = 0.0;       ///< ||(M + beta)^{-1/2} A||, bound 1
  Real inv_sqrt_norm = 0.0;          ///< ||(M + beta)^{-1/2}||, bound beta^{-1/2}
  Real inv_norm = 0.0;               ///< ||(M + beta)^{-1}||, bound beta^{-1}
  Real slack = 1e-8;
  bool ok = false;
};

/// Verifies the resolvent operator bounds for a Gram matrix; when the
/// operator carries its noise-side factor, the first two norms are computed
/// directly on the weighted noise space rather than through eigenvalues.
ResolventReport resolvent_checks(const MalliavinOp& op, Real beta, Real slack = 1e-8);
ResolventReport resolvent_checks(const Mat& m, Real beta, Real slack = 1e-8);

/// Empirical frequency of {floor < eps} over an ensemble of floor estimates,
/// per epsilon in the grid; non-decreasing in eps by construction.
struct EpsilonTable {
  Vec eps;
  Vec frequency;
};
EpsilonTable epsilon_statistics(const std::vector<Real>& floors, const Vec& eps_grid);

/// Eigenvalue-threshold rank of a symmetric PSD matrix.
int rank_at_threshold(const Mat& m, Real threshold);

}  // namespace glsim

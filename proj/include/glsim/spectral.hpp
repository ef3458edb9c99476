#pragma once

#include "glsim/types.hpp"

namespace glsim {

/// Mean-zero real field on the 2*pi torus, expanded over the unit-normalized
/// trigonometric basis
///
///   b_k(z)    = sin(k z) / sqrt(pi),   k = 1..N   (sine modes)
///   b_{-k}(z) = cos(k z) / sqrt(pi),   k = 1..N   (cosine modes)
///
/// Coefficients are stored as [x_1 .. x_N | x_{-1} .. x_{-N}]: the sine block
/// first, then the cosine block, both ordered by increasing frequency. There
/// is no k = 0 entry; the field has zero spatial mean by construction.
struct SpectralField {
  int n_modes = 0;  ///< N: highest resolved frequency
  Vec coeffs;       ///< size 2*N

  SpectralField() = default;
  SpectralField(int n, Vec c) : n_modes(n), coeffs(std::move(c)) {
    if (coeffs.size() != 2 * static_cast<Index>(n_modes))
      throw std::invalid_argument("SpectralField: coefficient size mismatch");
  }

  static SpectralField zero(int n) { return SpectralField(n, Vec::Zero(2 * n)); }
  /// Unit coefficient on the signed mode k (k > 0 sine, k < 0 cosine).
  static SpectralField unit(int n, int mode);

  int dim() const { return 2 * n_modes; }
  Real coeff(int mode) const;
  Real& coeff(int mode);
  bool finite() const { return coeffs.allFinite(); }
};

/// Storage position of signed mode k in the coefficient layout.
inline int mode_index(int n_modes, int mode) {
  if (mode == 0 || mode > n_modes || mode < -n_modes)
    throw std::invalid_argument("mode_index: mode out of range");
  return mode > 0 ? mode - 1 : n_modes + (-mode) - 1;
}

/// Signed mode at storage position i.
inline int index_mode(int n_modes, int i) {
  return i < n_modes ? i + 1 : -(i - n_modes + 1);
}

/// |k| of the mode at storage position i.
inline int index_frequency(int n_modes, int i) {
  return i < n_modes ? i + 1 : i - n_modes + 1;
}

/// Point samples at the uniform grid z_j = 2*pi*j / M.
struct GridField {
  Vec samples;
  int size() const { return static_cast<int>(samples.size()); }
};

/// Selects a weighted l2 norm family.
///   Hs: weights (1 + k^2)^sigma   (Sobolev H^sigma)
///   Vs: weights (k^2)^sigma       (domain of the sigma/2 power of -Laplacian)
struct SobolevIndex {
  enum class Family { Hs, Vs };
  Real sigma = 0.0;
  Family family = Family::Hs;
};

/// Precomputed synthesis/analysis matrices between coefficients and a uniform
/// grid of M >= 4*N + 1 points (exact dealiasing for cubic products). The
/// analysis matrix is (2*pi/M) * synthesis^T, which makes the pair an exact
/// inverse on band-limited fields and makes transposed applications cheap.
class SpectralTransform {
 public:
  /// M = smallest power of two >= 4*N + 1.
  explicit SpectralTransform(int n_modes);
  /// Custom grid size (must satisfy M >= 2*N + 1).
  SpectralTransform(int n_modes, int grid_size);

  int n_modes() const { return n_; }
  int grid_size() const { return m_; }

  GridField to_grid(const SpectralField& f) const;
  /// Inverse transform. Mean (k = 0) content of the samples is discarded;
  /// its magnitude is reported through `discarded_mean` when non-null.
  SpectralField to_spectral(const GridField& g, Real* discarded_mean = nullptr) const;

  /// Dealiased spectral coefficients of f^3, truncated to n_modes.
  SpectralField cubic(const SpectralField& f) const;

  /// Synthesis matrix (M x 2N): samples = synthesis() * coeffs.
  const Mat& synthesis() const { return synth_; }
  /// Analysis matrix (2N x M): coeffs = analysis() * samples.
  const Mat& analysis() const { return analysis_; }

 private:
  int n_, m_;
  Mat synth_, analysis_;
};

/// Shared transform with the default dealiased grid for a given resolution.
/// Plans are built once and cached; safe for concurrent use.
const SpectralTransform& transform_for(int n_modes);
/// Shared transform with a grid of at least `min_grid` points.
const SpectralTransform& padded_transform_for(int n_modes, int min_grid);

/// A = -Laplacian: multiplies the coefficient on mode k by k^2.
SpectralField apply_A(const SpectralField& f);

Real inner(const SpectralField& f, const SpectralField& g);

/// Weighted l2 norm per the index family; sigma = 0 gives the plain L2 norm.
Real norm(const SpectralField& f, const SobolevIndex& idx = {});
Real norm(const Vec& coeffs, int n_modes, const SobolevIndex& idx);

enum class Band { Low, High };

/// Band::Low keeps modes 0 < |k| <= N (projection P_N); Band::High keeps the
/// complement (Q_N = I - P_N).
SpectralField project(const SpectralField& f, int N, Band band);
/// In-place band projection on a raw coefficient vector.
void project_inplace(Vec& coeffs, int n_modes, int N, Band band);

inline int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace glsim

#include "glsim/spectral.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace glsim {

SpectralField SpectralField::unit(int n, int mode) {
  SpectralField f = zero(n);
  f.coeffs[mode_index(n, mode)] = 1.0;
  return f;
}

Real SpectralField::coeff(int mode) const { return coeffs[mode_index(n_modes, mode)]; }
Real& SpectralField::coeff(int mode) { return coeffs[mode_index(n_modes, mode)]; }

SpectralTransform::SpectralTransform(int n_modes)
    : SpectralTransform(n_modes, next_pow2(4 * n_modes + 1)) {}

SpectralTransform::SpectralTransform(int n_modes, int grid_size) : n_(n_modes), m_(grid_size) {
  if (n_ < 1) throw std::invalid_argument("SpectralTransform: n_modes must be >= 1");
  if (m_ < 2 * n_ + 1)
    throw std::invalid_argument("SpectralTransform: grid too small for resolution");
  const Real inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
  synth_.resize(m_, 2 * n_);
  for (int j = 0; j < m_; ++j) {
    const Real z = 2.0 * M_PI * j / m_;
    for (int k = 1; k <= n_; ++k) {
      synth_(j, k - 1) = std::sin(k * z) * inv_sqrt_pi;
      synth_(j, n_ + k - 1) = std::cos(k * z) * inv_sqrt_pi;
    }
  }
  // Trigonometric quadrature with weight 2*pi/M is exact for the products
  // appearing in <g, b_k> whenever g is band-limited below M - N.
  analysis_ = (2.0 * M_PI / m_) * synth_.transpose();
}

GridField SpectralTransform::to_grid(const SpectralField& f) const {
  if (f.n_modes != n_) throw std::invalid_argument("to_grid: resolution mismatch");
  if (!f.finite()) throw std::invalid_argument("to_grid: non-finite coefficients");
  return GridField{synth_ * f.coeffs};
}

SpectralField SpectralTransform::to_spectral(const GridField& g, Real* discarded_mean) const {
  if (g.size() != m_) throw std::invalid_argument("to_spectral: grid size mismatch");
  if (!g.samples.allFinite()) throw std::invalid_argument("to_spectral: non-finite samples");
  if (discarded_mean) *discarded_mean = std::abs(g.samples.mean());
  return SpectralField(n_, analysis_ * g.samples);
}

SpectralField SpectralTransform::cubic(const SpectralField& f) const {
  if (f.n_modes != n_) throw std::invalid_argument("cubic: resolution mismatch");
  Vec w = synth_ * f.coeffs;
  w = w.array().cube();
  return SpectralField(n_, analysis_ * w);
}

namespace {
std::mutex plan_mutex;
std::map<std::pair<int, int>, std::unique_ptr<SpectralTransform>>& plan_cache() {
  static std::map<std::pair<int, int>, std::unique_ptr<SpectralTransform>> cache;
  return cache;
}
const SpectralTransform& cached_plan(int n, int m) {
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto& cache = plan_cache();
  auto key = std::make_pair(n, m);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, std::make_unique<SpectralTransform>(n, m)).first;
  return *it->second;
}
}  // namespace

const SpectralTransform& transform_for(int n_modes) {
  return cached_plan(n_modes, next_pow2(4 * n_modes + 1));
}

const SpectralTransform& padded_transform_for(int n_modes, int min_grid) {
  return cached_plan(n_modes, next_pow2(std::max(min_grid, 4 * n_modes + 1)));
}

SpectralField apply_A(const SpectralField& f) {
  SpectralField out = f;
  for (int i = 0; i < f.dim(); ++i) {
    const Real k = index_frequency(f.n_modes, i);
    out.coeffs[i] *= k * k;
  }
  return out;
}

Real inner(const SpectralField& f, const SpectralField& g) {
  if (f.n_modes != g.n_modes) throw std::invalid_argument("inner: resolution mismatch");
  return f.coeffs.dot(g.coeffs);
}

Real norm(const Vec& coeffs, int n_modes, const SobolevIndex& idx) {
  if (!std::isfinite(idx.sigma) || idx.sigma < 0.0)
    throw std::invalid_argument("norm: sigma must be finite and >= 0");
  if (idx.sigma == 0.0) return coeffs.norm();
  Real acc = 0.0;
  for (int i = 0; i < coeffs.size(); ++i) {
    const Real g = static_cast<Real>(index_frequency(n_modes, static_cast<int>(i))) *
                   static_cast<Real>(index_frequency(n_modes, static_cast<int>(i)));
    const Real w = idx.family == SobolevIndex::Family::Hs ? std::pow(1.0 + g, idx.sigma)
                                                          : std::pow(g, idx.sigma);
    acc += w * coeffs[i] * coeffs[i];
  }
  return std::sqrt(acc);
}

Real norm(const SpectralField& f, const SobolevIndex& idx) {
  return norm(f.coeffs, f.n_modes, idx);
}

void project_inplace(Vec& coeffs, int n_modes, int N, Band band) {
  if (N < 1 || N > n_modes) throw std::invalid_argument("project: N out of range");
  for (int i = 0; i < coeffs.size(); ++i) {
    const bool low = index_frequency(n_modes, static_cast<int>(i)) <= N;
    if (low != (band == Band::Low)) coeffs[i] = 0.0;
  }
}

SpectralField project(const SpectralField& f, int N, Band band) {
  SpectralField out = f;
  project_inplace(out.coeffs, out.n_modes, N, band);
  return out;
}

}  // namespace glsim

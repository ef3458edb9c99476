#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "glsim/types.hpp"

namespace glsim {

/// SplitMix64 finalizer; the fixed-point-free mixer used by the seeding scheme.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Counter-mode seed derivation, scheme "splitmix64-v1":
///   derive_seed(master, index, tag)
///     = splitmix64( splitmix64( splitmix64(master) ^ GOLDEN*(index+1) ) ^ fnv1a64(tag) )
/// Stable across platforms and versions; distinct (index, tag) pairs give
/// independent streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                 std::string_view purpose) {
  constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ (kGolden * (index + 1)));
  return splitmix64(h ^ fnv1a64(purpose));
}

/// Standard-normal stream with a platform-independent Box-Muller draw on top
/// of mt19937_64 (std::normal_distribution is implementation-defined, this
/// is not).
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  Real next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const Real u1 = (static_cast<Real>(engine_() >> 11) + 1.0) * 0x1p-53;  // (0, 1]
    const Real u2 = static_cast<Real>(engine_() >> 11) * 0x1p-53;          // [0, 1)
    const Real r = std::sqrt(-2.0 * std::log(u1));
    const Real a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  void fill(Vec& out) {
    for (Index i = 0; i < out.size(); ++i) out[i] = next();
  }

  /// Uniform in [0, 1).
  Real uniform() { return static_cast<Real>(engine_() >> 11) * 0x1p-53; }

 private:
  std::mt19937_64 engine_;
  Real spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace glsim

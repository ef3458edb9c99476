#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "glsim/spectral.hpp"
#include "glsim/types.hpp"

namespace glsim {

/// A finite set of distinct nonzero integer frequencies.
using ModeSet = std::set<int>;

ModeSet make_mode_set(const std::vector<int>& modes);

/// One round of the forced-mode closure: {k + l + m : k in prev, l,m in z0},
/// with 0 removed (the state space carries no constant mode).
ModeSet znext(const ModeSet& prev, const ModeSet& z0);

/// Finite certificate for the mode-generation condition: symmetry of the
/// forced set and coverage of every frequency 0 < |k| <= cutoff within
/// depth_limit closure rounds.
struct HypothesisReport {
  static constexpr int kUnreached = -1;

  bool symmetric = false;
  bool finite = false;
  int cutoff = 0;
  int depth_limit = 0;
  std::map<int, int> coverage;  ///< mode -> first generation depth, or kUnreached
  bool pass = false;
  std::string failure_reason;

  std::string to_text() const;
};

HypothesisReport check_hypothesis(const ModeSet& z0, int cutoff, int depth_limit);

/// cos(freq * z + phase * pi/2) with phase in {0, 1}; phase 1 is -sin(freq z).
struct BracketTerm {
  int freq = 0;
  int phase = 0;
};

/// Finite real combination of terms cos(k z + m pi/2), kept in canonical form:
/// k >= 0, m in {0, 1}, and no identically-zero (k = 0, m = 1) entries.
/// k = 0 constants are allowed as intermediates of products.
class TrigPoly {
 public:
  TrigPoly() = default;

  /// Adds c * cos(k z + p pi/2) for any integer k and phase p (mod 4).
  void add(int freq, int phase, Real coeff);
  void add(const TrigPoly& other, Real scale = 1.0);

  Real coeff(int freq, int phase) const;
  const std::map<std::pair<int, int>, Real>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }

  Real eval(Real z) const;
  Real max_abs_coeff() const;
  /// Drops entries with |coeff| <= tol.
  void prune(Real tol = 0.0);

  static TrigPoly term(int freq, int phase, Real coeff = 1.0);

  /// Convert to a spectral field; requires all frequencies <= n_modes and no
  /// constant component above `tol`.
  SpectralField to_field(int n_modes, Real tol = 1e-14) const;

 private:
  std::map<std::pair<int, int>, Real> terms_;
};

/// Product-to-sum expansion of cos(a) * cos(b); exact, two terms.
TrigPoly product_to_sum(const BracketTerm& a, const BracketTerm& b);
TrigPoly multiply(const TrigPoly& p, const BracketTerm& b);

/// First-order bracket of the drift with a constant direction f = cos(kz + m pi/2):
/// (k^2 - 1) f + 3 u^2 f, with the product dealiased and truncated to the
/// resolution of u. Requires 3*|k| <= n_modes.
SpectralField bracket_first(int freq, int phase, const SpectralField& u);

/// Third bracket: 6 cos(kz + m pi/2) cos(lz + m' pi/2) cos(jz + m'' pi/2).
/// Independent of the state by construction.
TrigPoly bracket_third(int k, int l, int j, int m, int mp, int mpp);

/// Coefficients over the 8 phase triples (m, m', m'') in lexicographic order
/// expressing cos((k+l+j) z) and sin((k+l+j) z) as combinations of third
/// brackets. Solved by least squares and verified by expansion.
struct Recombination {
  Eigen::Matrix<Real, 8, 1> cos_coeffs;
  Eigen::Matrix<Real, 8, 1> sin_coeffs;
  Real cos_residual = 0.0;  ///< max |coeff| of (expansion - target)
  Real sin_residual = 0.0;
  bool ok = false;
};

Recombination solve_recombination(int k, int l, int j, Real residual_tol = 1e-10);

}  // namespace glsim

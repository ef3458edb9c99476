#pragma once

#include <string>

#include "glsim/spectral.hpp"
#include "glsim/types.hpp"

namespace glsim {

/// Small family of bounded Lipschitz observables of finitely many modes, the
/// test functions for averaging, mixing and gradient experiments.
///
///   const:<c>            Phi(u) = c
///   capnorm:<N>:<delta>  Phi(u) = min(1, ||P_N u|| / delta)
///   tanh:<k>             Phi(u) = tanh(u_k)
class Functional {
 public:
  enum class Kind { Constant, CappedLowModeNorm, TanhCoeff };

  static Functional constant(Real c);
  static Functional capped_low_mode_norm(int n_low, Real delta);
  static Functional tanh_coeff(int mode);
  static Functional parse(const std::string& descriptor);

  Real operator()(const Vec& u, int n_modes) const;
  /// Gradient where defined (zero on the capped plateau and at kinks).
  Vec gradient(const Vec& u, int n_modes) const;
  /// sup_u ||grad Phi||, used for Lipschitz normalization checks.
  Real lipschitz_bound() const;

  Kind kind() const { return kind_; }
  std::string describe() const;

 private:
  Kind kind_ = Kind::Constant;
  Real value_ = 0.0;  // constant c, or delta
  int mode_ = 0;      // N or k
};

}  // namespace glsim

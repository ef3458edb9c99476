#include "glsim/functionals.hpp"

#include <cmath>
#include <sstream>

namespace glsim {

Functional Functional::constant(Real c) {
  Functional f;
  f.kind_ = Kind::Constant;
  f.value_ = c;
  return f;
}

Functional Functional::capped_low_mode_norm(int n_low, Real delta) {
  if (n_low < 1) throw std::invalid_argument("capped_low_mode_norm: N must be >= 1");
  if (!(delta > 0.0)) throw std::invalid_argument("capped_low_mode_norm: delta must be > 0");
  Functional f;
  f.kind_ = Kind::CappedLowModeNorm;
  f.mode_ = n_low;
  f.value_ = delta;
  return f;
}

Functional Functional::tanh_coeff(int mode) {
  if (mode == 0) throw std::invalid_argument("tanh_coeff: mode must be nonzero");
  Functional f;
  f.kind_ = Kind::TanhCoeff;
  f.mode_ = mode;
  return f;
}

Functional Functional::parse(const std::string& descriptor) {
  std::istringstream is(descriptor);
  std::string kind;
  std::getline(is, kind, ':');
  if (kind == "const") {
    std::string rest;
    std::getline(is, rest);
    if (rest.empty()) throw std::invalid_argument("bad const descriptor");
    return constant(std::stod(rest));
  }
  if (kind == "capnorm") {
    std::string a, b;
    std::getline(is, a, ':');
    std::getline(is, b, ':');
    if (a.empty() || b.empty()) throw std::invalid_argument("bad capnorm descriptor");
    return capped_low_mode_norm(std::stoi(a), std::stod(b));
  }
  if (kind == "tanh") {
    std::string a;
    std::getline(is, a, ':');
    if (a.empty()) throw std::invalid_argument("bad tanh descriptor");
    return tanh_coeff(std::stoi(a));
  }
  throw std::invalid_argument("unknown functional descriptor: " + descriptor);
}

Real Functional::operator()(const Vec& u, int n_modes) const {
  switch (kind_) {
    case Kind::Constant:
      return value_;
    case Kind::CappedLowModeNorm: {
      Real acc = 0.0;
      for (Index i = 0; i < u.size(); ++i)
        if (index_frequency(n_modes, static_cast<int>(i)) <= mode_) acc += u[i] * u[i];
      return std::min(1.0, std::sqrt(acc) / value_);
    }
    case Kind::TanhCoeff:
      return std::tanh(u[mode_index(n_modes, mode_)]);
  }
  return 0.0;
}

Vec Functional::gradient(const Vec& u, int n_modes) const {
  Vec g = Vec::Zero(u.size());
  switch (kind_) {
    case Kind::Constant:
      break;
    case Kind::CappedLowModeNorm: {
      Real acc = 0.0;
      for (Index i = 0; i < u.size(); ++i)
        if (index_frequency(n_modes, static_cast<int>(i)) <= mode_) acc += u[i] * u[i];
      const Real r = std::sqrt(acc);
      if (r > 0.0 && r < value_) {
        for (Index i = 0; i < u.size(); ++i)
          if (index_frequency(n_modes, static_cast<int>(i)) <= mode_)
            g[i] = u[i] / (r * value_);
      }
      break;
    }
    case Kind::TanhCoeff: {
      const int i = mode_index(n_modes, mode_);
      const Real t = std::tanh(u[i]);
      g[i] = 1.0 - t * t;
      break;
    }
  }
  return g;
}

Real Functional::lipschitz_bound() const {
  switch (kind_) {
    case Kind::Constant:
      return 0.0;
    case Kind::CappedLowModeNorm:
      return 1.0 / value_;
    case Kind::TanhCoeff:
      return 1.0;
  }
  return 0.0;
}

std::string Functional::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Constant:
      os << "const:" << value_;
      break;
    case Kind::CappedLowModeNorm:
      os << "capnorm:" << mode_ << ":" << value_;
      break;
    case Kind::TanhCoeff:
      os << "tanh:" << mode_;
      break;
  }
  return os.str();
}

}  // namespace glsim

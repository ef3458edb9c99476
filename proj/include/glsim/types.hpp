#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace glsim {

using Real = double;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Eigen::Index;

/// Thrown when a state leaves the numerically trusted regime (blow-up guard).
struct NumericalGuard : std::runtime_error {
  explicit NumericalGuard(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when an iterative search runs out of its trial budget.
struct BudgetExhausted : std::runtime_error {
  explicit BudgetExhausted(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace glsim

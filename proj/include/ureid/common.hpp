#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace ureid {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Error categories; the CLI maps them to exit codes (config=2, data=3, numeric=4).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Violated precondition between modules; always a caller bug.
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

inline constexpr double kUnitNormTol = 1e-6;

inline bool is_unit_norm(const Vec& v, double tol = kUnitNormTol) {
  return std::abs(v.norm() - 1.0) <= tol;
}

inline Vec l2_normalized(const Vec& v) {
  const double n = v.norm();
  if (!std::isfinite(n) || n <= 0.0) {
    throw NumericError("cannot L2-normalize vector with norm " + std::to_string(n));
  }
  return v / n;
}

}  // namespace ureid

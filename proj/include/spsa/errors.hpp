#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace spsa {

/// Bad argument: dimension mismatch, empty dimension, unknown id.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inconsistent or incomplete configuration (e.g. missing rho_k in rho-adaptive mode).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A function evaluation produced a non-finite value.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, Eigen::VectorXd at)
      : std::runtime_error(what), point_(std::move(at)) {}

  const Eigen::VectorXd& point() const noexcept { return point_; }

 private:
  Eigen::VectorXd point_;
};

/// Enumeration requested beyond the brute-force bound.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A hypothesis of the asymptotic-normality result does not hold.
class NotApplicableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spsa

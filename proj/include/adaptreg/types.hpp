#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace adaptreg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Thrown for inconsistent dimensions, missing constants and invalid
// configuration values.
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Model combinations the algorithms do not support (for example a
// state-dependent basis with a delayed input).
class UnsupportedConfiguration : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A matrix that was required to be symmetric positive definite was not.
class CertificateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A state or estimate became non-finite, or left the divergence ball.
class NumericalDivergence : public std::runtime_error {
 public:
  NumericalDivergence(const std::string& trajectory, long step, const std::string& what)
      : std::runtime_error(trajectory + " trajectory diverged at step " +
                           std::to_string(step) + ": " + what),
        trajectory_(trajectory),
        step_(step) {}

  const std::string& trajectory() const { return trajectory_; }
  long step() const { return step_; }

 private:
  std::string trajectory_;
  long step_;
};

// Generic numerical failure inside an estimator (solve residual too large,
// inverse drift that a refresh could not repair).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace adaptreg

#pragma once

#include <stdexcept>
#include <string>

namespace sd {

/// Invalid arguments: bad dimensions, out-of-range hyperparameters, empty inputs.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A factorization or eigensolver could not produce a trustworthy result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Particle coordinates became non-finite; usually the step size is too large.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(long step, const std::string& what)
      : NumericalError("diverged at step " + std::to_string(step) + ": " + what), step_(step) {}

  long step() const noexcept { return step_; }

 private:
  long step_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sd

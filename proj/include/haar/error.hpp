#pragma once

#include <stdexcept>
#include <string>

namespace haar {

/// Malformed input: unknown labels, wrong sizes, non-finite values, bad files.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed input that violates a required mathematical property
/// (normalization, invariance, partition, cocycle, unit rows, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative method did not reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace haar

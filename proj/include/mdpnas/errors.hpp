#pragma once

#include <stdexcept>
#include <string>

namespace mdpnas {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: a row that does not sum to one, a discount outside [0,1),
/// a schema violation in an instance file.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An iterative routine exhausted its budget without meeting its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Arguments outside the mathematical domain of a formula.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The MDP has tied optimal actions, so gaps-based quantities are undefined.
class UniquenessError : public DomainError {
 public:
  using DomainError::DomainError;
};

}  // namespace mdpnas

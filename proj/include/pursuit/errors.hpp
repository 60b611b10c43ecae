#pragma once

#include <stdexcept>
#include <string>

namespace pursuit {

/// Invalid argument or shape mismatch supplied by the caller.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input is structurally valid but numerically degenerate (rank deficient,
/// zero variance, no signal).
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file content. The message carries the row/column location.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Covariance matrix not positive definite even after jitter.
class NonPdError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative fit did not converge. Carries no partial state; callers that
/// need the best-so-far iterate use the typed subclasses.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pursuit

#pragma once

#include <stdexcept>
#include <string>

namespace dirac3 {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed factor, out-of-range parameter, mismatched mode sets.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold
/// (non-normalized eigenvector, simple cluster handed to a split search, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The Galerkin weight matrix is not positive definite (t too large for the
/// truncation).
class PdFailure : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// No candidate factor in a split search separated the cluster.
class ExhaustionError : public Error {
 public:
  using Error::Error;
};

}  // namespace dirac3

#pragma once

#include <stdexcept>
#include <string>

namespace qport {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree (portfolio length vs. matrix rows, ...).
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain where a formula or solver is defined
/// (alpha <= 1, non-positive variance, bad step size, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The covariance matrix could not be factorized or is too ill-conditioned.
class SingularCovariance : public Error {
 public:
  using Error::Error;
};

/// Steepest descent left the stable region.
class Diverged : public Error {
 public:
  using Error::Error;
};

/// Belief propagation hit a non-positive cavity precision.
class NumericalBreakdown : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or spec string.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace qport

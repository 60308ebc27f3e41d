#pragma once

#include <stdexcept>
#include <string>

namespace hdpf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A dimension, count or index argument is out of its permitted range.
class InvalidDimension : public Error {
 public:
  using Error::Error;
};

/// Every candidate weight underflowed, so no normalized distribution exists.
class DegenerateLikelihood : public Error {
 public:
  using Error::Error;
};

/// A covariance that must be positive definite could not be factorized.
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

/// A computed density or ratio came out NaN or infinite.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Argument outside a function's mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Configuration rejected; the message names the offending key path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace hdpf

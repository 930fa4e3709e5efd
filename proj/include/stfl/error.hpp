#pragma once

#include <stdexcept>
#include <string>

namespace stfl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents disagree with what an operation requires.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed or semantically invalid input data (labels, manifests, boxes).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A binary or text file does not follow its on-disk layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf produced or consumed, or a degenerate numeric configuration.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An operation was invoked out of order (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace stfl

#pragma once

#include <stdexcept>
#include <string>

namespace audet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes handed to a primitive.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values produced by a forward op, a loss, or a gradient.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyperparameters or toggle combinations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// API misuse, e.g. backward on a tensor recorded elsewhere.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed manifests, rasters, checkpoints and config files.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace audet

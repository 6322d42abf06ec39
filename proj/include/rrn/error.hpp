#pragma once

#include <stdexcept>
#include <string>

namespace rrn {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise malformed numeric input.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Inconsistent model, experiment or command configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A subject lacks data the operation needs (missing landmark, unknown id).
class DatasetError : public Error {
 public:
  using Error::Error;
};

/// Malformed dataset or checkpoint file.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Tensor shapes do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Operation called in the wrong order (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Training diverged (NaN loss, non-finite gradient).
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace rrn

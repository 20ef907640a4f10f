#pragma once

#include <stdexcept>
#include <string>

namespace motionnet {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration: bad shapes, incompatible dimensions, out-of-range
/// hyperparameters, unknown config keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Invalid runtime input: out-of-range labels, mismatched sample counts,
/// motions exceeding generator bounds.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents (checkpoints, .flo files, config files).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required (diverged training,
/// NaN activations).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace motionnet

#pragma once

#include <stdexcept>
#include <string>

namespace tcm {

/// Rejected input: non-finite parameters, violated preconditions, bad config values.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A solver, quadrature or fit could not produce a trustworthy number.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration schema violation (unknown key, wrong type, missing field).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tcm

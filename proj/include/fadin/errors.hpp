#pragma once

#include <stdexcept>
#include <string>

namespace fadin {

// Bad user-supplied configuration (grid, config file, experiment spec).
// The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Kernel or model parameters outside their feasible set.
class ConstraintViolation : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Event data inconsistent with the declared horizon or dimension.
class DataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// NaN/inf losses, nonpositive intensities in the log-likelihood,
// unstable simulation. The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Refusal to allocate beyond the configured memory cap.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fadin

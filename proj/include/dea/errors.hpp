#pragma once

#include <stdexcept>
#include <string>

namespace dea {

// Invalid configuration: dimension mismatch, bad rule parameters, unknown keys.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A non-finite value surfaced in a loss, target, or gradient.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sampling from an empty replay buffer.
class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dea

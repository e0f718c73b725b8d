#pragma once

#include <stdexcept>

namespace sensorsel {

/// Incompatible matrix/vector dimensions or an index out of range.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Recorded data cannot support the requested computation
/// (too few samples, missing channels, rank failures).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed scenario/plant files or inconsistent configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The discounted system a*A has spectral radius >= 1, so the
/// infinite-horizon energy is undefined.
class StabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sensorsel

#pragma once

#include <stdexcept>
#include <string>

namespace rescnn {

/// Shapes of two operands are incompatible.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An integer id or index fell outside its valid range.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Input data (CSV, GloVe, prepared files) is malformed or inconsistent.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A checkpoint is corrupt, truncated, or does not match the requested model.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training diverged (non-finite loss or gradients).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value or flag.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace rescnn

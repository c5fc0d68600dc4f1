// Error taxonomy. Each category maps to a distinct CLI exit code.
#pragma once

#include <stdexcept>
#include <string>

namespace hampbench {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters or experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Dataset ingestion, schema validation, split capacity.
class DataError : public Error {
 public:
  using Error::Error;
};

// Optimization failures (divergence, NaN objective).
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Attack-side failures (degenerate attack training sets, bad shadow assignment).
class AttackError : public Error {
 public:
  using Error::Error;
};

// Metric computation failures (single-class score sets, empty index sets).
class MetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace hampbench

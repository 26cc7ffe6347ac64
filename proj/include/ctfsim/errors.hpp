#pragma once

#include <stdexcept>

namespace ctfsim {

// Failure taxonomy, mirrored by the CLI exit codes:
//   ConfigError -> 2, DataError -> 3,
//   ModelValidityError / CalibrationError -> 4.

// Bad or inconsistent parameters supplied by the caller.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unreadable or malformed input data (files, streams).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Request outside the regime where the device model is trusted.
struct ModelValidityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fitting failed: degenerate or insufficient sample data.
struct CalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ctfsim

#pragma once

#include <stdexcept>
#include <string>

namespace stopover {

/// Invalid run configuration or CLI arguments (exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (exit code 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical failure or broken internal invariant (exit code 4).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Oracle instance exceeds the enumeration/rejection budget.
struct BudgetError : ConfigError {
  using ConfigError::ConfigError;
};

}  // namespace stopover

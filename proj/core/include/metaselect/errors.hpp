#pragma once

#include <stdexcept>
#include <string>

namespace metaselect {

// Invalid input or configuration, detected before any numerical work.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure while fitting (rank deficiency, insufficient data).
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankError : public FitError {
 public:
  using FitError::FitError;
};

// Process exit codes used by the CLI.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 1,
  kExitNumericError = 2,
  kExitVerifyFailure = 3,
};

}  // namespace metaselect

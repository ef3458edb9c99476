#pragma once

#include <string>

#include "glsim/config.hpp"

namespace glsim {

struct RunOptions {
  std::string config_path;
  std::string out_dir_override;  ///< from --out or GLSIM_OUT
  int threads_override = 0;      ///< from --threads or GLSIM_THREADS; 0 = auto
};

/// Exit codes of the command dispatcher.
enum ExitCode : int {
  kOk = 0,
  kValidationError = 2,
  kNumericalGuardTripped = 3,
  kBudgetError = 4,
};

/// Runs one CLI command against a config file, writing a report bundle.
/// Returns the process exit code; never throws.
int run_command(const std::string& command, const RunOptions& opts);

/// Resolved worker count: override > GLSIM_THREADS > hardware concurrency.
int resolve_threads(int override_value);

}  // namespace glsim

#pragma once

// Subcommands of the liveclock tool. Each returns the process exit code.

#include <iosfwd>

namespace liveclock::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kNoSolution = 2,
  kIoError = 3,
  kConfigError = 4,
  kEstimationFailed = 5,
};

/// Parses argv and dispatches to a subcommand.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace liveclock::cli

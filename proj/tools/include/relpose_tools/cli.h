#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace relpose {

// Process exit codes of the relpose tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,  // bad flags, unreadable or malformed input
  kExitInsufficientData = 2,
  kExitEstimationFailed = 3,
};

// Runs the relpose command line. args excludes the program name. Output that
// is not redirected by --output goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace relpose

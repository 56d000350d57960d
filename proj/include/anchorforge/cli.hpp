#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace anchorforge {

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

/// Runs one command line (without the program name) against the given
/// streams and returns its exit code. Report files are only created when the
/// command succeeds.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace anchorforge

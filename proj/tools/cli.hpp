#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ndp::cli {

/// Process exit codes.
enum ExitCode : int { kOk = 0, kUsage = 1, kNumerical = 2 };

/// Runs the `ndp` command line. `args` excludes the program name. Output
/// goes to `out`, diagnostics to `err`; nothing is read from the environment.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ndp::cli

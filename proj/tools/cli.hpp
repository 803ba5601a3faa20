#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rep3net::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

/// Runs one command line (without the program name). Reports go to `out`;
/// diagnostics and the one-line error record go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rep3net::cli

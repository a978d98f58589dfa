#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ptm {

enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitParse = 2, kExitNumerical = 3 };

/// Runs one command line (without the program name). Results go to `out`,
/// logs and errors to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ptm

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace camiqa::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

/// Runs one command line (without the program name). Exceptions are mapped
/// to exit codes; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace camiqa::cli

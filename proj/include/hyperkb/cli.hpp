#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hyperkb::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kParseError = 2, kEvalError = 3, kIoError = 4 };

/// Runs one command line. `args[0]` is the program name.
int cli_main(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace hyperkb::cli

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace permnet {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitInput = 2,
  kExitEmptyResult = 3,
  kExitNumeric = 4,
  kExitGradcheck = 5,
};

/// Runs the tool; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace permnet

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace semicl {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitNumerical = 3,
  kExitInconclusive = 4,
};

/// Runs the command line tool. `args` excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace semicl

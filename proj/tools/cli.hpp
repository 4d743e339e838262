#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace casimirtc::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kSolver = 3,
  kIo = 4,
  kFit = 5,
  kCalibration = 6,
};

/// Entry point shared by the executable and the tests. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace casimirtc::cli

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace depthjitter::cli {

/// Stable exit codes for scripting.
enum ExitCode : int {
    kSuccess = 0,
    kPartialFailure = 1,
    kUsageError = 2,
};

/// Parses and runs one invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace depthjitter::cli

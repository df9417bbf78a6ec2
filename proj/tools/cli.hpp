#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ecommit::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 2,
    kNonConvergence = 3,
    kBreach = 4,
};

/// Environment variable naming the default results directory of `run`.
inline constexpr const char* kOutputEnv = "ECOMMIT_OUT";

/// Entry point of the `ecommit` tool. `args` excludes the program name.
int runCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ecommit::cli

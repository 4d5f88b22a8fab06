#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace shufflenet {

inline constexpr std::string_view kVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitFindings = 1,
  kExitUsage = 2,
  kExitRuntime = 3,
};

/// Entry point of the `shufflenet` tool. `args` excludes the program name.
/// Results go to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace shufflenet

#pragma once

#include <string>
#include <vector>

namespace tsforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitStageFailure = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the `forge` binary. args excludes the program name.
// Data goes to files, logs to stderr, and one summary line
// `stage=<name> status=ok records=<n>` to stdout on success.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace tsforge::cli

#pragma once

#include <iosfwd>

namespace rbsgd {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitVerification = 3;

/// Environment variable overriding output.directory from the config.
inline constexpr const char* kOutputDirEnv = "RBSGD_OUTPUT_DIR";

/// Entry point of the `rbsgd` tool; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rbsgd

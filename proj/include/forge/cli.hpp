#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace forge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// Settings shared by every subcommand once flags, config file and environment
// are merged. Paths are absolute.
struct RunConfig {
  std::string subcommand;
  std::filesystem::path out_dir;
  bool force = false;
  int verbosity = 1;  // 0 quiet, 1 normal, 2 verbose
};

// Entry point for the `forge` binary. Diagnostics go to stderr; machine
// output only to files under --out.
int run(int argc, const char* const* argv);
// Same, with the program name omitted.
int run(const std::vector<std::string>& args);

}  // namespace forge::cli

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "learnreach/grid.hpp"

namespace learnreach {

enum class Command { solve, ttl, policy, reach, scenario };

struct RunOptions {
  Command command = Command::scenario;
  std::optional<std::filesystem::path> config;  // JSON config file
  std::optional<std::string> name;              // catalog scenario
  std::filesystem::path out = "out";
  unsigned threads = 0;                          // 0 = available parallelism
  std::optional<Interpolation> interpolation;
  bool retain_slices = false;
  bool timestamp = false;
  bool dump_config = false;  // print the resolved config and exit
};

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitSolverError = 1;
inline constexpr int kExitConfigError = 2;

// Runs one command, writing artifacts under `out`. Diagnostics go to `err`.
int run_command(const RunOptions& options, std::ostream& out, std::ostream& err);

// Parses argv and runs; usage errors exit with kExitConfigError.
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace learnreach

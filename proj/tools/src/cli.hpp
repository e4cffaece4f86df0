#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace jumpkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct GlobalOptions {
  std::filesystem::path out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

struct CommandResult {
  std::vector<std::filesystem::path> files;
};

// Subcommand names accepted on the command line.
const std::vector<std::string>& command_names();

// Runs one subcommand on a parsed config, writing its files under
// options.out. Throws ConfigError or jumpkit::Error.
CommandResult run_command(const std::string& name, const nlohmann::json& config,
                          const GlobalOptions& options);

// Full command-line entry point; returns the process exit code and reports
// failures as one JSON object on err.
int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace jumpkit::cli

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace rdslab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct CommandOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

/// Subcommands that take a config and write a fresh run directory.
const std::vector<std::string>& run_commands();

/// Runs one of run_commands(). Returns an exit code; diagnostics go to `log`
/// and, once the run directory exists, into its manifest.
int run_command(const std::string& name, const CommandOptions& opts, std::ostream& log);

/// Renders SVG figures for a finished run into <run_dir>/figures.
int plot_command(const std::string& run_dir, std::ostream& log);

}  // namespace rdslab

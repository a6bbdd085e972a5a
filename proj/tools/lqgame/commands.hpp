#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lqgame/config.hpp"
#include "lqgame/ensemble.hpp"

namespace lqgame::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitCriteriaFailed = 1,
  kExitConfig = 2,
  kExitDivergence = 3,
  kExitNumerical = 4,
};

inline constexpr const char* kOutputDirEnv = "LQGAME_OUTPUT_DIR";

/// Options shared by every subcommand after flag parsing.
struct CommonOptions {
  std::filesystem::path config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::size_t> seeds;
  std::optional<unsigned> threads;
  bool emit_plot_script = false;
  bool no_dither = false;
};

/// Config with command-line flags folded in.
ExperimentConfig resolve_config(const CommonOptions& opts);

/// --output-dir, then $LQGAME_OUTPUT_DIR, then the config's output.directory.
std::filesystem::path resolve_output_dir(const CommonOptions& opts, const ExperimentConfig& config);

int cmd_simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                 std::ostream& out, std::ostream& err);
int cmd_riccati(const ExperimentConfig& config, std::ostream& out, std::ostream& err);
int cmd_diagnose(const ExperimentConfig& config, const std::string& experiment,
                 const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);
int cmd_ensemble(const ExperimentConfig& config, std::size_t n, const std::filesystem::path& out_dir,
                 std::ostream& out, std::ostream& err, const MemberHook& hook = {});

/// Writes a standalone matplotlib script next to the CSVs.
void write_plot_script(const std::filesystem::path& out_dir);

/// Full command line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lqgame::cli

#pragma once

#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace fairdtd::cli {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitConfig = 2,
  kExitIo = 3,
  kExitData = 4,
  kExitUndefinedMetric = 5,
};

int exit_code_for(const std::exception& e);

/// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "FAIRDTD_OUTPUT_ROOT";

/// Flag value, else config value, else $FAIRDTD_OUTPUT_ROOT/<command>, else
/// ./fairdtd-out/<command>.
std::filesystem::path resolve_output(const std::optional<std::filesystem::path>& flag,
                                     const std::optional<std::filesystem::path>& config,
                                     const std::string& command);

void cmd_gen_data(const SyntheticSpec& spec, const SplitFractions& fractions,
                  std::uint64_t split_seed, const std::filesystem::path& out, bool overwrite);
void cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& out, bool overwrite);
void cmd_ablate(const ExperimentConfig& cfg, const std::filesystem::path& out, bool overwrite);

enum class SweepParam { Alpha, Tau };
SweepParam parse_sweep_param(const std::string& name);
/// Default grids: alpha 0.1..0.9 step 0.1; tau 1..5 plus the node-specific row.
void cmd_sweep(const ExperimentConfig& cfg, SweepParam param,
               const std::optional<std::vector<double>>& grid, const std::filesystem::path& out,
               bool overwrite);
void cmd_partial_data_report(const ExperimentConfig& cfg, const std::filesystem::path& out,
                             bool overwrite);
void cmd_export_embeddings(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
                           const std::filesystem::path& out_file, bool overwrite);
void cmd_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
                  const std::optional<std::filesystem::path>& out_file, bool overwrite);

}  // namespace fairdtd::cli

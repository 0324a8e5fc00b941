#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "table.hpp"

namespace bsgd::cli {

struct RunContext {
  int jobs = 1;
};

struct ExperimentResult {
  std::vector<Table> tables;
  // Free-form summary facts copied into the metadata file.
  std::vector<std::pair<std::string, std::string>> notes;
  long failed_runs = 0;

  const Table& table(const std::string& name) const;
};

/// Executes the sweep x seeds cross product of the config. Per-run seeds are
/// derive_seed(root_seed, "<experiment> <coordinates>", seed index), with
/// coordinates rendered at 17 significant digits.
ExperimentResult run_experiment(const Config& config, const RunContext& context = {});

ExperimentResult run_bias_sweep(const Config& config, const RunContext& context);
ExperimentResult run_rate_study(const Config& config, const RunContext& context);
ExperimentResult run_logistic(const Config& config, const RunContext& context);
ExperimentResult run_maml(const Config& config, const RunContext& context);
ExperimentResult run_iv(const Config& config, const RunContext& context);
ExperimentResult run_floor(const Config& config, const RunContext& context);

/// --output flag, then output_dir, then $BSGD_OUTPUT_DIR, then ./bsgd-out.
std::filesystem::path resolve_output_dir(const Config& config, const std::string& flag);

struct RunInfo {
  std::string command_line;
  double wall_seconds = 0.0;
  int jobs = 1;
};

/// Writes <name>.csv per table, config.resolved.ini and metadata.json.
void write_outputs(const Config& config, const ExperimentResult& result,
                   const std::filesystem::path& dir, const RunInfo& info);

}  // namespace bsgd::cli

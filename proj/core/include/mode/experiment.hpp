#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mode/adapters.hpp"
#include "mode/analysis.hpp"
#include "mode/budget.hpp"
#include "mode/synthbench.hpp"
#include "mode/training.hpp"

namespace mode {

struct VariantSpec {
  std::string name;
  AdapterKind kind = AdapterKind::lora;
  AdapterConfig config;
};

// One experiment = one master seed. Component streams are split off with
// derive_seed(master, label): "data" for the task set, "init:<variant>" and
// "train:<variant>" per adapter.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  SynthSpec synth;
  std::optional<std::uint64_t> synth_seed;  // pins the data stream if present
  std::vector<VariantSpec> variants;
  TrainConfig train;
  std::filesystem::path out_dir;
  std::uint64_t backbone_nonembedding = 0;
};

// Parses the JSON experiment config; ConfigError messages name the missing
// or invalid field.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct TrainOutputs {
  std::filesystem::path checkpoint;
  std::filesystem::path report;
  std::filesystem::path losses;
  RunReport run;
};

// gen -> init -> train -> eval; writes checkpoint.json, report.json,
// losses.csv under out_dir. Requires exactly one variant.
TrainOutputs run_train(const ExperimentConfig& config);

struct CompareOutputs {
  std::filesystem::path comparison_csv;
  std::filesystem::path win_rate_csv;
  std::vector<RunReport> runs;
};

// Trains every variant on the identical seeded mixture dataset; emits
// comparison.csv and win_rate.csv (exact binomial significance flags).
CompareOutputs run_compare(const ExperimentConfig& config);

struct PcaOutputs {
  std::filesystem::path points_csv;
  std::filesystem::path summary_json;
  double separation_by_rank = 0.0;
  double separation_by_task = 0.0;
};

// Loads LoRA checkpoints, slices the requested projection along the rank
// dimension, runs PCA, and writes the projected points plus a summary with
// separation scores grouped by rank index and by task label.
PcaOutputs run_pca(const std::vector<std::filesystem::path>& checkpoints, SliceKind kind,
                   std::size_t k, const std::filesystem::path& out_dir);

std::string budget_rows_to_csv(const std::vector<BudgetRow>& rows);
void write_budget_csv(const std::filesystem::path& path, const std::vector<BudgetRow>& rows);

}  // namespace mode

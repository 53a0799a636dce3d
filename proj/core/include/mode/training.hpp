#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mode/adapters.hpp"

namespace mode {

enum class OptimizerKind { adam, sgd };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(const std::string& s);

struct TrainConfig {
  std::size_t steps = 2000;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

void validate(const TrainConfig& config);

// Per-parameter moment accumulators (adam) in named_parameters() order.
struct OptimizerState {
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::uint64_t step = 0;
};

OptimizerState make_optimizer_state(const Adapter& adapter, OptimizerKind kind);

struct TaskData {
  Matrix x;  // n x P
  Matrix y;  // n x Q
  std::string label;
};
using Dataset = std::vector<TaskData>;

struct SplitDataset {
  Dataset train;
  Dataset eval;
};

// Per-task 90/10 split: the leading 90% of each task's rows train, the
// trailing 10% are held out (rows are i.i.d. by construction, so position
// carries no information and the split is identical for every consumer).
SplitDataset split_train_eval(const Dataset& dataset, double eval_fraction = 0.1);

double mse_loss(const Matrix& pred, const Matrix& target);

struct Batch {
  Matrix x;
  Matrix y;
};

// One forward/backward/update on every trainable matrix; w0 is frozen.
// Returns the pre-update loss. Aborts with NumericError on non-finite loss.
double train_step(Adapter& adapter, const Matrix& w0, const Batch& batch,
                  const TrainConfig& config, OptimizerState& state);

struct RunReport {
  std::vector<double> step_losses;
  double final_eval_loss = 0.0;
  std::vector<double> per_task_eval_loss;
  std::vector<std::string> task_labels;
  double wall_clock_seconds = 0.0;
  TrainConfig train_config;
  AdapterKind adapter_kind = AdapterKind::lora;
  AdapterConfig adapter_config;
  std::uint64_t seed = 0;
};

// Full run: 90/10 split, seeded shuffled minibatches over the mixed training
// pool (reshuffled each epoch), final evaluation on the held-out rows.
RunReport train_loop(Adapter& adapter, const Matrix& w0, const Dataset& dataset,
                     const TrainConfig& config);

// Pooled and per-task eval MSE of an adapter on a dataset.
double eval_loss(const Adapter& adapter, const Matrix& w0, const Dataset& dataset,
                 std::vector<double>* per_task = nullptr);

std::string run_report_to_json(const RunReport& report);
void save_run_report(const std::filesystem::path& path, const RunReport& report);
std::string losses_to_csv(const RunReport& report);  // header "step,train_loss"
void save_losses_csv(const std::filesystem::path& path, const RunReport& report);

}  // namespace mode

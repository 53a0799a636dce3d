#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "mode/rng.hpp"
#include "mode/training.hpp"

namespace mode {

struct SynthSpec {
  std::size_t num_tasks = 15;
  std::size_t input_dim = 32;   // P
  std::size_t output_dim = 32;  // Q
  std::size_t true_rank = 4;    // r*
  bool shared_down = true;
  double noise_std = 0.05;
  std::size_t samples_per_task = 2000;
  std::uint64_t seed = 0;
};

void validate(const SynthSpec& spec);

struct SyntheticTask {
  Matrix delta;  // P x Q ground-truth update, unit Frobenius norm
  Matrix x;      // N x P, i.i.d. standard normal
  Matrix y;      // N x Q, x (w0 + delta) + noise
  std::string label;
};

struct SyntheticTaskSet {
  SynthSpec spec;
  Matrix w0;  // shared frozen base, P x Q
  std::vector<SyntheticTask> tasks;
};

// Pure function of the spec. With shared_down=true every task's delta has the
// column space of one orthonormal P x r* basis; otherwise each task draws its
// own basis.
SyntheticTaskSet gen_multitask(const SynthSpec& spec);

// Irreducible MSE of the generative model: noise_std^2.
double oracle_best_loss(const SyntheticTaskSet& taskset);

// View of the (x, y, label) triples for the training module.
Dataset to_dataset(const SyntheticTaskSet& taskset);

struct SampledBatch {
  Matrix x;
  Matrix y;
  std::vector<std::size_t> task_ids;
};

// Draws rows without replacement within an epoch; an exhausted epoch is
// reshuffled, never an error. Mixture mode pools all tasks uniformly.
class BatchSampler {
 public:
  BatchSampler(const SyntheticTaskSet& taskset, std::optional<std::size_t> single_task,
               std::uint64_t seed);

  SampledBatch sample(std::size_t batch_size);

  std::size_t pool_size() const { return pool_.size(); }

 private:
  const SyntheticTaskSet* set_;
  std::vector<std::pair<std::size_t, std::size_t>> pool_;  // (task, row)
  std::size_t cursor_ = 0;
  Rng rng_;
};

// Directory of CSV matrices plus manifest.json (spec echo, seed, file index).
void save_taskset(const std::filesystem::path& dir, const SyntheticTaskSet& taskset);
SyntheticTaskSet load_taskset(const std::filesystem::path& dir);

}  // namespace mode

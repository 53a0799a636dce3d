#include "mode/synthbench.hpp"

#include <cmath>

#include <json.hpp>

#include "mode/io.hpp"

namespace mode {

using nlohmann::json;

void validate(const SynthSpec& spec) {
  if (spec.num_tasks == 0) throw ConfigError("num_tasks: must be at least 1");
  if (spec.input_dim == 0) throw ConfigError("input_dim: must be positive");
  if (spec.output_dim == 0) throw ConfigError("output_dim: must be positive");
  if (spec.true_rank == 0) throw ConfigError("true_rank: must be positive");
  if (spec.true_rank > std::min(spec.input_dim, spec.output_dim)) {
    throw ConfigError("true_rank: must not exceed min(input_dim, output_dim) (" +
                      std::to_string(spec.true_rank) + " > " +
                      std::to_string(std::min(spec.input_dim, spec.output_dim)) + ")");
  }
  if (spec.samples_per_task < 10) throw ConfigError("samples_per_task: must be at least 10");
  if (spec.noise_std < 0.0) throw ConfigError("noise_std: must be nonnegative");
}

namespace {

// Modified Gram-Schmidt with one re-orthogonalization pass. Random normal
// input is full column rank almost surely.
Matrix orthonormalize_columns(Matrix a) {
  const std::size_t n = a.rows(), k = a.cols();
  for (std::size_t j = 0; j < k; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < j; ++i) {
        double dot = 0.0;
        for (std::size_t row = 0; row < n; ++row) dot += a.at(row, i) * a.at(row, j);
        for (std::size_t row = 0; row < n; ++row) a.at(row, j) -= dot * a.at(row, i);
      }
    }
    double norm = 0.0;
    for (std::size_t row = 0; row < n; ++row) norm += a.at(row, j) * a.at(row, j);
    norm = std::sqrt(norm);
    if (norm < 1e-12) throw NumericError("orthonormalize_columns: rank-deficient input");
    for (std::size_t row = 0; row < n; ++row) a.at(row, j) /= norm;
  }
  return a;
}

}  // namespace

SyntheticTaskSet gen_multitask(const SynthSpec& spec) {
  validate(spec);
  const std::size_t P = spec.input_dim;
  const std::size_t Q = spec.output_dim;
  const std::size_t r = spec.true_rank;

  Rng rng(spec.seed);
  SyntheticTaskSet out;
  out.spec = spec;
  out.w0 = rng.normal_matrix(P, Q, 1.0 / std::sqrt(static_cast<double>(P)));

  Matrix shared_basis;
  if (spec.shared_down) {
    shared_basis = orthonormalize_columns(rng.normal_matrix(P, r));
  }

  for (std::size_t t = 0; t < spec.num_tasks; ++t) {
    SyntheticTask task;
    task.label = "task" + std::to_string(t);
    const Matrix basis =
        spec.shared_down ? shared_basis : orthonormalize_columns(rng.normal_matrix(P, r));
    Matrix up = rng.normal_matrix(Q, r);
    Matrix delta = matmul(basis, transpose(up));
    const double norm = frobenius_norm(delta);
    task.delta = scale(delta, 1.0 / norm);

    task.x = rng.normal_matrix(spec.samples_per_task, P);
    const Matrix effective = add(out.w0, task.delta);
    task.y = matmul(task.x, effective);
    if (spec.noise_std > 0.0) {
      for (double& v : task.y.entries()) v += rng.normal(0.0, spec.noise_std);
    }
    out.tasks.push_back(std::move(task));
  }
  return out;
}

double oracle_best_loss(const SyntheticTaskSet& taskset) {
  return taskset.spec.noise_std * taskset.spec.noise_std;
}

Dataset to_dataset(const SyntheticTaskSet& taskset) {
  Dataset out;
  for (const SyntheticTask& task : taskset.tasks) {
    out.push_back(TaskData{task.x, task.y, task.label});
  }
  return out;
}

BatchSampler::BatchSampler(const SyntheticTaskSet& taskset, std::optional<std::size_t> single_task,
                           std::uint64_t seed)
    : set_(&taskset), rng_(seed) {
  if (single_task) {
    if (*single_task >= taskset.tasks.size()) {
      throw IndexError("BatchSampler: task " + std::to_string(*single_task) + " out of range");
    }
    for (std::size_t i = 0; i < taskset.tasks[*single_task].x.rows(); ++i) {
      pool_.emplace_back(*single_task, i);
    }
  } else {
    for (std::size_t t = 0; t < taskset.tasks.size(); ++t) {
      for (std::size_t i = 0; i < taskset.tasks[t].x.rows(); ++i) pool_.emplace_back(t, i);
    }
  }
  rng_.shuffle(pool_);
}

SampledBatch BatchSampler::sample(std::size_t batch_size) {
  if (batch_size == 0 || batch_size > pool_.size()) {
    throw ConfigError("batch_size: must be in [1, " + std::to_string(pool_.size()) + "], got " +
                      std::to_string(batch_size));
  }
  if (cursor_ + batch_size > pool_.size()) {
    rng_.shuffle(pool_);
    cursor_ = 0;
  }
  const std::size_t P = set_->spec.input_dim;
  const std::size_t Q = set_->spec.output_dim;
  SampledBatch batch{Matrix(batch_size, P), Matrix(batch_size, Q), {}};
  batch.task_ids.reserve(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) {
    const auto [t, i] = pool_[cursor_ + b];
    const SyntheticTask& task = set_->tasks[t];
    for (std::size_t j = 0; j < P; ++j) batch.x.at(b, j) = task.x.at(i, j);
    for (std::size_t j = 0; j < Q; ++j) batch.y.at(b, j) = task.y.at(i, j);
    batch.task_ids.push_back(t);
  }
  cursor_ += batch_size;
  return batch;
}

void save_taskset(const std::filesystem::path& dir, const SyntheticTaskSet& taskset) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["spec"] = {{"num_tasks", taskset.spec.num_tasks},
                      {"input_dim", taskset.spec.input_dim},
                      {"output_dim", taskset.spec.output_dim},
                      {"true_rank", taskset.spec.true_rank},
                      {"shared_down", taskset.spec.shared_down},
                      {"noise_std", taskset.spec.noise_std},
                      {"samples_per_task", taskset.spec.samples_per_task},
                      {"seed", taskset.spec.seed}};
  manifest["seed"] = taskset.spec.seed;
  json files = json::object();
  files["w0"] = "w0.csv";
  write_matrix_csv(dir / "w0.csv", taskset.w0);
  json task_index = json::array();
  for (std::size_t t = 0; t < taskset.tasks.size(); ++t) {
    const SyntheticTask& task = taskset.tasks[t];
    const std::string stem = "task" + std::to_string(t);
    write_matrix_csv(dir / (stem + "_x.csv"), task.x);
    write_matrix_csv(dir / (stem + "_y.csv"), task.y);
    write_matrix_csv(dir / (stem + "_delta.csv"), task.delta);
    task_index.push_back({{"label", task.label},
                          {"x", stem + "_x.csv"},
                          {"y", stem + "_y.csv"},
                          {"delta", stem + "_delta.csv"}});
  }
  files["tasks"] = std::move(task_index);
  manifest["files"] = std::move(files);
  atomic_write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

SyntheticTaskSet load_taskset(const std::filesystem::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_text(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw IoError("taskset manifest parse failed: " + (dir / "manifest.json").string() + ": " +
                  e.what());
  }
  try {
    SyntheticTaskSet out;
    const json& spec = manifest.at("spec");
    out.spec.num_tasks = spec.at("num_tasks").get<std::size_t>();
    out.spec.input_dim = spec.at("input_dim").get<std::size_t>();
    out.spec.output_dim = spec.at("output_dim").get<std::size_t>();
    out.spec.true_rank = spec.at("true_rank").get<std::size_t>();
    out.spec.shared_down = spec.at("shared_down").get<bool>();
    out.spec.noise_std = spec.at("noise_std").get<double>();
    out.spec.samples_per_task = spec.at("samples_per_task").get<std::size_t>();
    out.spec.seed = spec.at("seed").get<std::uint64_t>();

    const json& files = manifest.at("files");
    out.w0 = read_matrix_csv(dir / files.at("w0").get<std::string>());
    for (const json& entry : files.at("tasks")) {
      SyntheticTask task;
      task.label = entry.at("label").get<std::string>();
      task.x = read_matrix_csv(dir / entry.at("x").get<std::string>());
      task.y = read_matrix_csv(dir / entry.at("y").get<std::string>());
      task.delta = read_matrix_csv(dir / entry.at("delta").get<std::string>());
      out.tasks.push_back(std::move(task));
    }
    return out;
  } catch (const json::exception& e) {
    throw ConfigError("taskset manifest " + dir.string() + ": " + e.what());
  }
}

}  // namespace mode

#include "mode/training.hpp"

#include <chrono>
#include <cmath>

#include <json.hpp>

#include "mode/graph.hpp"
#include "mode/io.hpp"
#include "mode/rng.hpp"

namespace mode {

using nlohmann::json;

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::adam ? "adam" : "sgd";
}

OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgd") return OptimizerKind::sgd;
  throw ConfigError("optimizer: expected adam|sgd, got \"" + s + "\"");
}

void validate(const TrainConfig& config) {
  if (config.steps == 0) throw ConfigError("steps: must be at least 1");
  if (config.batch_size == 0) throw ConfigError("batch_size: must be at least 1");
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning_rate: must be positive");
}

OptimizerState make_optimizer_state(const Adapter& adapter, OptimizerKind kind) {
  OptimizerState state;
  if (kind == OptimizerKind::adam) {
    for (const NamedParamView& p : named_parameters(adapter)) {
      state.first_moment.emplace_back(p.matrix->rows(), p.matrix->cols());
      state.second_moment.emplace_back(p.matrix->rows(), p.matrix->cols());
    }
  }
  return state;
}

SplitDataset split_train_eval(const Dataset& dataset, double eval_fraction) {
  if (dataset.empty()) throw ConfigError("dataset: must not be empty");
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
    throw ConfigError("eval_fraction: must be in (0, 1)");
  }
  SplitDataset out;
  for (const TaskData& task : dataset) {
    const std::size_t n = task.x.rows();
    std::size_t n_eval = static_cast<std::size_t>(std::floor(n * eval_fraction));
    if (n_eval == 0) n_eval = 1;
    if (n_eval >= n) throw ConfigError("dataset: task \"" + task.label + "\" too small to split");
    const std::size_t n_train = n - n_eval;

    auto rows = [&](std::size_t lo, std::size_t hi) {
      Matrix x(hi - lo, task.x.cols());
      Matrix y(hi - lo, task.y.cols());
      for (std::size_t i = lo; i < hi; ++i) {
        for (std::size_t j = 0; j < task.x.cols(); ++j) x.at(i - lo, j) = task.x.at(i, j);
        for (std::size_t j = 0; j < task.y.cols(); ++j) y.at(i - lo, j) = task.y.at(i, j);
      }
      return TaskData{std::move(x), std::move(y), task.label};
    };
    out.train.push_back(rows(0, n_train));
    out.eval.push_back(rows(n_train, n));
  }
  return out;
}

double mse_loss(const Matrix& pred, const Matrix& target) {
  if (!pred.same_shape(target)) {
    throw ShapeError("mse_loss: shapes disagree: " + shape_str(pred) + " vs " +
                     shape_str(target));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.data()[i] - target.data()[i];
    total += d * d;
  }
  return total / static_cast<double>(pred.size());
}

namespace {

void apply_update(Adapter& adapter, const std::vector<Matrix>& grads, const TrainConfig& config,
                  OptimizerState& state) {
  std::vector<NamedParam> params = named_parameters(adapter);
  state.step += 1;
  if (config.optimizer == OptimizerKind::sgd) {
    for (std::size_t p = 0; p < params.size(); ++p) {
      double* theta = params[p].matrix->data();
      const double* g = grads[p].data();
      for (std::size_t i = 0; i < params[p].matrix->size(); ++i) {
        theta[i] -= config.learning_rate * g[i];
      }
    }
    return;
  }
  const double bias1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    double* theta = params[p].matrix->data();
    const double* g = grads[p].data();
    double* m = state.first_moment[p].data();
    double* v = state.second_moment[p].data();
    for (std::size_t i = 0; i < params[p].matrix->size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      theta[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

}  // namespace

double train_step(Adapter& adapter, const Matrix& w0, const Batch& batch,
                  const TrainConfig& config, OptimizerState& state) {
  Tape tape;
  GraphAdapter graph = lift(tape, adapter);
  Var x = tape.constant(batch.x);
  Var target = tape.constant(batch.y);
  Var frozen_w0 = tape.constant(w0);
  Var pred = adapter_forward(tape, x, frozen_w0, graph);
  Var loss = mse_loss(tape, pred, target);

  const double loss_value = tape.value(loss).at(0, 0);
  if (!std::isfinite(loss_value)) {
    throw NumericError("train_step: non-finite loss at optimizer step " +
                       std::to_string(state.step + 1));
  }
  tape.backward(loss);

  std::vector<Matrix> grads;
  grads.reserve(graph.trainable.size());
  for (Var v : graph.trainable) grads.push_back(tape.grad(v));
  apply_update(adapter, grads, config, state);
  return loss_value;
}

double eval_loss(const Adapter& adapter, const Matrix& w0, const Dataset& dataset,
                 std::vector<double>* per_task) {
  if (per_task) per_task->clear();
  double total_sq = 0.0;
  std::size_t total_entries = 0;
  for (const TaskData& task : dataset) {
    const Matrix pred = adapter_forward(task.x, w0, adapter);
    const double task_mse = mse_loss(pred, task.y);
    if (per_task) per_task->push_back(task_mse);
    total_sq += task_mse * static_cast<double>(pred.size());
    total_entries += pred.size();
  }
  return total_sq / static_cast<double>(total_entries);
}

RunReport train_loop(Adapter& adapter, const Matrix& w0, const Dataset& dataset,
                     const TrainConfig& config) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();

  SplitDataset split = split_train_eval(dataset);

  // Mixed training pool of (task, row) indices.
  std::vector<std::pair<std::size_t, std::size_t>> pool;
  for (std::size_t t = 0; t < split.train.size(); ++t) {
    for (std::size_t i = 0; i < split.train[t].x.rows(); ++i) pool.emplace_back(t, i);
  }
  if (pool.size() < config.batch_size) {
    throw ConfigError("batch_size: exceeds available training rows (" +
                      std::to_string(config.batch_size) + " > " + std::to_string(pool.size()) +
                      ")");
  }

  const std::size_t P = w0.rows();
  const std::size_t Q = w0.cols();
  Rng rng(derive_seed(config.seed, "batches"));
  rng.shuffle(pool);
  std::size_t cursor = 0;

  OptimizerState state = make_optimizer_state(adapter, config.optimizer);
  RunReport report;
  report.step_losses.reserve(config.steps);

  Batch batch{Matrix(config.batch_size, P), Matrix(config.batch_size, Q)};
  for (std::size_t step = 0; step < config.steps; ++step) {
    if (cursor + config.batch_size > pool.size()) {
      rng.shuffle(pool);
      cursor = 0;
    }
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      const auto [t, i] = pool[cursor + b];
      for (std::size_t j = 0; j < P; ++j) batch.x.at(b, j) = split.train[t].x.at(i, j);
      for (std::size_t j = 0; j < Q; ++j) batch.y.at(b, j) = split.train[t].y.at(i, j);
    }
    cursor += config.batch_size;
    report.step_losses.push_back(train_step(adapter, w0, batch, config, state));
  }

  report.final_eval_loss = eval_loss(adapter, w0, split.eval, &report.per_task_eval_loss);
  for (const TaskData& task : split.eval) report.task_labels.push_back(task.label);
  report.train_config = config;
  report.adapter_kind = adapter.kind;
  report.adapter_config = adapter.config;
  report.seed = config.seed;
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string run_report_to_json(const RunReport& report) {
  json doc;
  doc["seed"] = report.seed;
  doc["adapter"] = {{"kind", to_string(report.adapter_kind)},
                    {"input_dim", report.adapter_config.input_dim},
                    {"output_dim", report.adapter_config.output_dim},
                    {"lora_rank", report.adapter_config.lora_rank},
                    {"num_experts", report.adapter_config.num_experts},
                    {"expert_rank", report.adapter_config.expert_rank}};
  doc["train"] = {{"steps", report.train_config.steps},
                  {"batch_size", report.train_config.batch_size},
                  {"learning_rate", report.train_config.learning_rate},
                  {"seed", report.train_config.seed},
                  {"optimizer", to_string(report.train_config.optimizer)},
                  {"beta1", report.train_config.beta1},
                  {"beta2", report.train_config.beta2},
                  {"epsilon", report.train_config.epsilon}};
  doc["step_losses"] = report.step_losses;
  doc["final_eval_loss"] = report.final_eval_loss;
  doc["per_task_eval_loss"] = report.per_task_eval_loss;
  doc["task_labels"] = report.task_labels;
  doc["wall_clock_seconds"] = report.wall_clock_seconds;
  return doc.dump(2) + "\n";
}

void save_run_report(const std::filesystem::path& path, const RunReport& report) {
  atomic_write_text(path, run_report_to_json(report));
}

std::string losses_to_csv(const RunReport& report) {
  std::string out = "step,train_loss\n";
  for (std::size_t i = 0; i < report.step_losses.size(); ++i) {
    out += std::to_string(i + 1);
    out += ',';
    out += format_double(report.step_losses[i]);
    out += '\n';
  }
  return out;
}

void save_losses_csv(const std::filesystem::path& path, const RunReport& report) {
  atomic_write_text(path, losses_to_csv(report));
}

}  // namespace mode

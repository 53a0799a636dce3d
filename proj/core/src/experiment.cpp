#include "mode/experiment.hpp"

#include <cstdio>
#include <future>
#include <thread>

#include <json.hpp>

#include "mode/checkpoint.hpp"
#include "mode/io.hpp"

namespace mode {

using nlohmann::json;

namespace {

const json& require_field(const json& obj, const std::string& key, const std::string& context) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ConfigError("missing field \"" + key + "\"" +
                      (context.empty() ? "" : " in " + context));
  }
  return obj.at(key);
}

template <class T>
T get_field(const json& obj, const std::string& key, const std::string& context) {
  try {
    return require_field(obj, key, context).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field \"" + key + "\"" + (context.empty() ? "" : " in " + context) +
                      " has the wrong type");
  }
}

template <class T>
T get_field_or(const json& obj, const std::string& key, const std::string& context, T fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return get_field<T>(obj, key, context);
}

SynthSpec parse_synth(const json& j, std::optional<std::uint64_t>& synth_seed) {
  SynthSpec spec;
  spec.num_tasks = get_field_or<std::size_t>(j, "num_tasks", "synth", spec.num_tasks);
  spec.input_dim = get_field_or<std::size_t>(j, "input_dim", "synth", spec.input_dim);
  spec.output_dim = get_field_or<std::size_t>(j, "output_dim", "synth", spec.output_dim);
  spec.true_rank = get_field_or<std::size_t>(j, "true_rank", "synth", spec.true_rank);
  spec.shared_down = get_field_or<bool>(j, "shared_down", "synth", spec.shared_down);
  spec.noise_std = get_field_or<double>(j, "noise_std", "synth", spec.noise_std);
  spec.samples_per_task =
      get_field_or<std::size_t>(j, "samples_per_task", "synth", spec.samples_per_task);
  if (j.contains("seed")) synth_seed = get_field<std::uint64_t>(j, "seed", "synth");
  return spec;
}

VariantSpec parse_variant(const json& j, const SynthSpec& synth, const std::string& context) {
  VariantSpec variant;
  const std::string kind_str = get_field<std::string>(j, "kind", context);
  variant.kind = adapter_kind_from_string(kind_str);
  variant.config.input_dim = synth.input_dim;
  variant.config.output_dim = synth.output_dim;
  variant.config.lora_rank = get_field<std::size_t>(j, "lora_rank", context);
  variant.config.num_experts = get_field_or<std::size_t>(j, "num_experts", context,
                                                         std::size_t{1});
  // Non-MoDE families have one routing group; their expert_rank defaults to r.
  const std::size_t default_p =
      variant.kind == AdapterKind::mode ? std::size_t{1} : variant.config.lora_rank;
  variant.config.expert_rank = get_field_or<std::size_t>(j, "expert_rank", context, default_p);
  variant.name = get_field_or<std::string>(j, "name", context, kind_str);
  validate(variant.config);
  return variant;
}

TrainConfig parse_train(const json& j) {
  TrainConfig config;
  config.steps = get_field_or<std::size_t>(j, "steps", "train", config.steps);
  config.batch_size = get_field_or<std::size_t>(j, "batch_size", "train", config.batch_size);
  config.learning_rate = get_field_or<double>(j, "learning_rate", "train", config.learning_rate);
  if (j.contains("optimizer")) {
    config.optimizer = optimizer_kind_from_string(get_field<std::string>(j, "optimizer", "train"));
  }
  config.beta1 = get_field_or<double>(j, "beta1", "train", config.beta1);
  config.beta2 = get_field_or<double>(j, "beta2", "train", config.beta2);
  config.epsilon = get_field_or<double>(j, "epsilon", "train", config.epsilon);
  validate(config);
  return config;
}

std::string percent_str(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": invalid JSON: " + e.what());
  }

  ExperimentConfig config;
  config.seed = get_field_or<std::uint64_t>(doc, "seed", "", std::uint64_t{0});
  config.synth = parse_synth(require_field(doc, "synth", ""), config.synth_seed);
  validate(config.synth);

  if (doc.contains("adapters")) {
    const json& list = doc.at("adapters");
    if (!list.is_array() || list.empty()) {
      throw ConfigError("field \"adapters\" must be a nonempty array");
    }
    for (std::size_t i = 0; i < list.size(); ++i) {
      config.variants.push_back(
          parse_variant(list[i], config.synth, "adapters[" + std::to_string(i) + "]"));
    }
  } else if (doc.contains("adapter")) {
    config.variants.push_back(parse_variant(doc.at("adapter"), config.synth, "adapter"));
  } else {
    throw ConfigError("missing field \"adapter\" (or \"adapters\")");
  }

  for (std::size_t i = 0; i < config.variants.size(); ++i) {
    for (std::size_t j = i + 1; j < config.variants.size(); ++j) {
      if (config.variants[i].name == config.variants[j].name) {
        throw ConfigError("adapters: duplicate variant name \"" + config.variants[i].name + "\"");
      }
    }
  }

  config.train = doc.contains("train") ? parse_train(doc.at("train")) : TrainConfig{};
  config.out_dir = get_field_or<std::string>(doc, "out_dir", "", std::string("."));
  config.backbone_nonembedding =
      get_field_or<std::uint64_t>(doc, "backbone_nonembedding", "", std::uint64_t{0});
  return config;
}

namespace {

struct VariantRun {
  Checkpoint checkpoint;
  RunReport report;
};

VariantRun train_variant(const ExperimentConfig& config, const SyntheticTaskSet& taskset,
                         const VariantSpec& variant) {
  const std::uint64_t init_seed = derive_seed(config.seed, "init:" + variant.name);
  Adapter adapter = init_adapter(variant.kind, variant.config, init_seed);

  TrainConfig train = config.train;
  train.seed = derive_seed(config.seed, "train:" + variant.name);

  RunReport report = train_loop(adapter, taskset.w0, to_dataset(taskset), train);
  return VariantRun{Checkpoint{std::move(adapter), init_seed, config.train.steps},
                    std::move(report)};
}

}  // namespace

TrainOutputs run_train(const ExperimentConfig& config) {
  if (config.variants.size() != 1) {
    throw ConfigError("train: expected exactly one adapter, got " +
                      std::to_string(config.variants.size()));
  }
  SynthSpec synth = config.synth;
  synth.seed = config.synth_seed.value_or(derive_seed(config.seed, "data"));
  const SyntheticTaskSet taskset = gen_multitask(synth);

  VariantRun run = train_variant(config, taskset, config.variants[0]);

  TrainOutputs out;
  out.checkpoint = config.out_dir / "checkpoint.json";
  out.report = config.out_dir / "report.json";
  out.losses = config.out_dir / "losses.csv";
  save_checkpoint(out.checkpoint, run.checkpoint);
  save_run_report(out.report, run.report);
  save_losses_csv(out.losses, run.report);
  out.run = std::move(run.report);
  return out;
}

CompareOutputs run_compare(const ExperimentConfig& config) {
  if (config.variants.size() < 2) {
    throw ConfigError("compare: needs at least 2 adapters, got " +
                      std::to_string(config.variants.size()));
  }
  if (config.backbone_nonembedding == 0) {
    throw ConfigError("missing field \"backbone_nonembedding\" (needed for percent column)");
  }
  SynthSpec synth = config.synth;
  synth.seed = config.synth_seed.value_or(derive_seed(config.seed, "data"));
  const SyntheticTaskSet taskset = gen_multitask(synth);

  // Variants are independent seeded runs over the same dataset; train them
  // concurrently.
  std::vector<std::future<VariantRun>> futures;
  for (const VariantSpec& variant : config.variants) {
    futures.push_back(std::async(std::launch::async, [&config, &taskset, &variant] {
      return train_variant(config, taskset, variant);
    }));
  }
  std::vector<VariantRun> runs;
  for (auto& f : futures) runs.push_back(f.get());

  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string& name = config.variants[i].name;
    save_checkpoint(config.out_dir / (name + "_checkpoint.json"), runs[i].checkpoint);
    save_run_report(config.out_dir / (name + "_report.json"), runs[i].report);
    save_losses_csv(config.out_dir / (name + "_losses.csv"), runs[i].report);
  }

  // comparison.csv: one row per variant.
  std::string comparison = "variant,total_params,percent,final_eval_loss";
  for (const std::string& label : runs[0].report.task_labels) comparison += "," + label;
  comparison += "\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const VariantSpec& variant = config.variants[i];
    const ParamBreakdown counts = param_count(variant.kind, variant.config);
    comparison += variant.name;
    comparison += "," + std::to_string(counts.total);
    comparison += "," + percent_str(param_percent(counts.total, config.backbone_nonembedding));
    comparison += "," + format_double(runs[i].report.final_eval_loss);
    for (double loss : runs[i].report.per_task_eval_loss) comparison += "," + format_double(loss);
    comparison += "\n";
  }

  // win_rate.csv: row beats column; lower eval loss wins; '*' marks
  // significance of the strict wins at 0.99 over a fair coin.
  std::string win_csv = "variant";
  for (const VariantSpec& variant : config.variants) win_csv += "," + variant.name;
  win_csv += "\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    win_csv += config.variants[i].name;
    for (std::size_t j = 0; j < runs.size(); ++j) {
      win_csv += ",";
      if (i == j) {
        win_csv += "\\";
        continue;
      }
      const std::vector<double>& li = runs[i].report.per_task_eval_loss;
      const std::vector<double>& lj = runs[j].report.per_task_eval_loss;
      std::vector<double> neg_i(li.size()), neg_j(lj.size());
      for (std::size_t t = 0; t < li.size(); ++t) {
        neg_i[t] = -li[t];
        neg_j[t] = -lj[t];
      }
      const double rate = win_rate(neg_i, neg_j);
      std::uint64_t wins = 0, decided = 0;
      for (std::size_t t = 0; t < li.size(); ++t) {
        if (li[t] == lj[t]) continue;
        ++decided;
        if (li[t] < lj[t]) ++wins;
      }
      char cell[32];
      std::snprintf(cell, sizeof(cell), "%.4f", rate);
      win_csv += cell;
      if (decided > 0 && binomial_significance(wins, decided).significant) win_csv += "*";
    }
    win_csv += "\n";
  }

  CompareOutputs out;
  out.comparison_csv = config.out_dir / "comparison.csv";
  out.win_rate_csv = config.out_dir / "win_rate.csv";
  atomic_write_text(out.comparison_csv, comparison);
  atomic_write_text(out.win_rate_csv, win_csv);
  for (VariantRun& run : runs) out.runs.push_back(std::move(run.report));
  return out;
}

PcaOutputs run_pca(const std::vector<std::filesystem::path>& checkpoints, SliceKind kind,
                   std::size_t k, const std::filesystem::path& out_dir) {
  if (checkpoints.size() < 2) {
    throw ConfigError("pca: needs at least 2 checkpoints, got " +
                      std::to_string(checkpoints.size()));
  }
  std::vector<LoraAdapter> adapters;
  std::vector<std::string> labels;
  for (const std::filesystem::path& path : checkpoints) {
    Checkpoint ckpt = load_checkpoint(path);
    if (ckpt.adapter.kind != AdapterKind::lora) {
      throw ConfigError("pca: checkpoint " + path.string() + " is kind \"" +
                        to_string(ckpt.adapter.kind) + "\", expected lora");
    }
    adapters.push_back(std::get<LoraAdapter>(std::move(ckpt.adapter.params)));
    labels.push_back(path.stem().string());
  }

  const RankSliceSet slices = collect_rank_slices(adapters, labels, kind);
  const PcaResult result = pca(slices, k);

  std::string points_csv = "pc1,pc2,pc3,task_label,rank_index,kind\n";
  for (std::size_t i = 0; i < slices.slices.size(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      points_csv += c < k ? format_double(result.projections.at(i, c)) : "0";
      points_csv += ",";
    }
    points_csv += slices.slices[i].task;
    points_csv += "," + std::to_string(slices.slices[i].rank_index);
    points_csv += "," + to_string(kind) + "\n";
  }

  // Separation is computed on the raw slice vectors; the projected CSV is
  // for plotting.
  Matrix raw(slices.slices.size(), slices.dim);
  std::vector<std::string> by_rank, by_task;
  for (std::size_t i = 0; i < slices.slices.size(); ++i) {
    for (std::size_t j = 0; j < slices.dim; ++j) raw.at(i, j) = slices.slices[i].v[j];
    by_rank.push_back(std::to_string(slices.slices[i].rank_index));
    by_task.push_back(slices.slices[i].task);
  }

  PcaOutputs out;
  out.separation_by_rank = cluster_separation(raw, by_rank);
  out.separation_by_task = cluster_separation(raw, by_task);

  nlohmann::json summary;
  summary["kind"] = to_string(kind);
  summary["num_checkpoints"] = checkpoints.size();
  summary["num_points"] = slices.slices.size();
  summary["explained_variance"] = result.model.explained_variance;
  summary["separation_by_rank_index"] = out.separation_by_rank;
  summary["separation_by_task"] = out.separation_by_task;

  const std::string stem = "pca_" + to_string(kind);
  out.points_csv = out_dir / (stem + "_points.csv");
  out.summary_json = out_dir / (stem + "_summary.json");
  atomic_write_text(out.points_csv, points_csv);
  atomic_write_text(out.summary_json, summary.dump(2) + "\n");
  return out;
}

std::string budget_rows_to_csv(const std::vector<BudgetRow>& rows) {
  std::string csv = "family,m,r,p,total,percent,compositions\n";
  for (const BudgetRow& row : rows) {
    csv += to_string(row.family);
    csv += "," + std::to_string(row.num_experts);
    csv += "," + std::to_string(row.lora_rank);
    csv += "," + std::to_string(row.expert_rank);
    csv += "," + std::to_string(row.total);
    csv += "," + percent_str(row.percent);
    csv += "," + std::to_string(row.compositions);
    csv += "\n";
  }
  return csv;
}

void write_budget_csv(const std::filesystem::path& path, const std::vector<BudgetRow>& rows) {
  atomic_write_text(path, budget_rows_to_csv(rows));
}

}  // namespace mode

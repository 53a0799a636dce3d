#include "mode/checkpoint.hpp"

#include <json.hpp>

#include "mode/io.hpp"

namespace mode {

using nlohmann::json;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json doc;
  doc["kind"] = to_string(ckpt.adapter.kind);
  doc["config"] = {{"P", ckpt.adapter.config.input_dim},
                   {"Q", ckpt.adapter.config.output_dim},
                   {"r", ckpt.adapter.config.lora_rank},
                   {"m", ckpt.adapter.config.num_experts},
                   {"p", ckpt.adapter.config.expert_rank}};
  json matrices = json::object();
  for (const NamedParamView& p : named_parameters(ckpt.adapter)) {
    matrices[p.name] = std::vector<double>(p.matrix->entries().begin(),
                                           p.matrix->entries().end());
  }
  doc["matrices"] = std::move(matrices);
  doc["seed"] = ckpt.seed;
  doc["step"] = ckpt.step;
  atomic_write_text(path, doc.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw IoError("checkpoint parse failed: " + path.string() + ": " + e.what());
  }
  try {
    AdapterConfig config;
    config.input_dim = doc.at("config").at("P").get<std::size_t>();
    config.output_dim = doc.at("config").at("Q").get<std::size_t>();
    config.lora_rank = doc.at("config").at("r").get<std::size_t>();
    config.num_experts = doc.at("config").at("m").get<std::size_t>();
    config.expert_rank = doc.at("config").at("p").get<std::size_t>();
    const AdapterKind kind = adapter_kind_from_string(doc.at("kind").get<std::string>());

    Checkpoint ckpt;
    ckpt.adapter = make_adapter(kind, config);
    ckpt.seed = doc.at("seed").get<std::uint64_t>();
    ckpt.step = doc.at("step").get<std::uint64_t>();

    const json& matrices = doc.at("matrices");
    for (const NamedParam& p : named_parameters(ckpt.adapter)) {
      const auto values = matrices.at(p.name).get<std::vector<double>>();
      if (values.size() != p.matrix->size()) {
        throw ConfigError("checkpoint matrix \"" + p.name + "\": expected " +
                          std::to_string(p.matrix->size()) + " entries, got " +
                          std::to_string(values.size()));
      }
      std::copy(values.begin(), values.end(), p.matrix->data());
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw ConfigError("checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace mode

#include "mode/graph.hpp"

namespace mode {

GraphAdapter lift(Tape& tape, const Adapter& adapter) {
  GraphAdapter out;
  out.kind = adapter.kind;
  out.expert_rank = adapter.config.expert_rank;

  // Leaves are created in named_parameters() order; the structural variant
  // below reuses those same Vars.
  std::vector<Var> leaves;
  for (const NamedParamView& p : named_parameters(adapter)) {
    leaves.push_back(tape.leaf(*p.matrix));
  }
  out.trainable = leaves;

  std::size_t next = 0;
  auto take = [&]() { return leaves[next++]; };

  std::visit(
      [&](const auto& params) {
        using T = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<T, LoraAdapter>) {
          LoraParams<Var> g;
          g.down = take();
          g.up = take();
          out.params = g;
        } else if constexpr (std::is_same_v<T, MoLoraAdapter>) {
          MoLoraParams<Var> g;
          for (std::size_t i = 0; i < params.experts.size(); ++i) {
            LoraParams<Var> e;
            e.down = take();
            e.up = take();
            g.experts.push_back(e);
          }
          g.router = take();
          out.params = std::move(g);
        } else if constexpr (std::is_same_v<T, MoLoraSDAdapter>) {
          MoLoraSDParams<Var> g;
          g.shared_down = take();
          for (std::size_t i = 0; i < params.ups.size(); ++i) g.ups.push_back(take());
          g.router = take();
          out.params = std::move(g);
        } else {
          ModeParams<Var> g;
          g.shared_down = take();
          for (std::size_t k = 0; k < params.groups.size(); ++k) {
            ModeGroup<Var> group;
            for (std::size_t i = 0; i < params.groups[k].ups.size(); ++i)
              group.ups.push_back(take());
            group.router = take();
            g.groups.push_back(std::move(group));
          }
          out.params = std::move(g);
        }
      },
      adapter.params);
  return out;
}

Var adapter_forward(Tape& tape, Var x, Var w0, const GraphAdapter& adapter) {
  TapeBackend bk{&tape};
  return std::visit(
      [&](const auto& params) -> Var {
        using T = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<T, LoraParams<Var>>) {
          return lora_apply(bk, x, w0, params);
        } else if constexpr (std::is_same_v<T, MoLoraParams<Var>>) {
          return molora_apply(bk, x, w0, params);
        } else if constexpr (std::is_same_v<T, MoLoraSDParams<Var>>) {
          return molora_sd_apply(bk, x, w0, params);
        } else {
          return mode_apply(bk, x, w0, params, adapter.expert_rank);
        }
      },
      adapter.params);
}

Var mse_loss(Tape& tape, Var pred, Var target) {
  const Matrix& shape = tape.value(pred);
  Var diff = tape.sub(pred, target);
  Var squared = tape.hadamard(diff, diff);
  return tape.scale(tape.sum(squared), 1.0 / static_cast<double>(shape.size()));
}

}  // namespace mode

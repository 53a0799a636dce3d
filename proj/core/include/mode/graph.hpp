#pragma once

#include "mode/adapters.hpp"
#include "mode/autodiff.hpp"

namespace mode {

// Records the shared adapter compositions onto a Tape.
struct TapeBackend {
  using Handle = Var;
  Tape* tape;

  Var matmul(Var a, Var b) const { return tape->matmul(a, b); }
  Var transpose(Var a) const { return tape->transpose(a); }
  Var add(Var a, Var b) const { return tape->add(a, b); }
  Var scale_rows(Var u, Var w) const { return tape->scale_rows(u, w); }
  Var slice_cols(Var a, std::size_t c0, std::size_t c1) const {
    return tape->slice_cols(a, c0, c1);
  }
  Var softmax_rows(Var a) const { return tape->softmax_rows(a); }
};

// An adapter's parameters materialized as tape leaves. `trainable` lists the
// leaves in named_parameters() order so gradients line up with optimizer
// state and checkpoints.
struct GraphAdapter {
  AdapterKind kind = AdapterKind::lora;
  std::size_t expert_rank = 1;
  std::variant<LoraParams<Var>, MoLoraParams<Var>, MoLoraSDParams<Var>, ModeParams<Var>> params;
  std::vector<Var> trainable;
};

GraphAdapter lift(Tape& tape, const Adapter& adapter);

Var adapter_forward(Tape& tape, Var x, Var w0, const GraphAdapter& adapter);

// Mean over all entries of squared error, built from tape primitives.
Var mse_loss(Tape& tape, Var pred, Var target);

}  // namespace mode

#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "mode/matrix.hpp"

namespace mode {

enum class AdapterKind { lora, molora, molora_sd, mode };

std::string to_string(AdapterKind kind);
AdapterKind adapter_kind_from_string(const std::string& s);

// Hyperparameters shared by every adapter family. P and Q are the frozen
// layer's input/output widths, r the LoRA rank, m the expert count, p the
// per-expert rank. r must be divisible by p; g = r/p is the group count.
struct AdapterConfig {
  std::size_t input_dim = 0;    // P
  std::size_t output_dim = 0;   // Q
  std::size_t lora_rank = 0;    // r
  std::size_t num_experts = 1;  // m
  std::size_t expert_rank = 1;  // p

  std::size_t groups() const { return lora_rank / expert_rank; }
};

void validate(const AdapterConfig& config);

// Parameter sets, generic over the handle type so the same structs describe
// plain matrices (H = Matrix) and tape variables (H = Var).
template <class H>
struct LoraParams {
  H down;  // P x r
  H up;    // Q x r
};

template <class H>
struct MoLoraParams {
  std::vector<LoraParams<H>> experts;  // m independent (down, up) pairs
  H router;                            // P x m
};

template <class H>
struct MoLoraSDParams {
  H shared_down;       // P x r, shared by all experts
  std::vector<H> ups;  // m matrices, each Q x r
  H router;            // P x m
};

template <class H>
struct ModeGroup {
  std::vector<H> ups;  // m rank-p blocks, each Q x p
  H router;            // P x m
};

template <class H>
struct ModeParams {
  H shared_down;                     // P x r
  std::vector<ModeGroup<H>> groups;  // g = r/p groups; group k consumes
                                     // columns [k*p, (k+1)*p) of shared_down
};

using LoraAdapter = LoraParams<Matrix>;
using MoLoraAdapter = MoLoraParams<Matrix>;
using MoLoraSDAdapter = MoLoraSDParams<Matrix>;
using ModeAdapter = ModeParams<Matrix>;

struct Adapter {
  AdapterKind kind = AdapterKind::lora;
  AdapterConfig config;
  std::variant<LoraAdapter, MoLoraAdapter, MoLoraSDAdapter, ModeAdapter> params;
};

// Zero-shape adapter of the requested family.
Adapter make_adapter(AdapterKind kind, const AdapterConfig& config);

// Shared initialization scheme: every down-projection entry drawn i.i.d.
// Normal(0, 0.01^2) from the seeded stream; up-projections and routers zero,
// so the adapter contributes nothing at step 0 and routing starts uniform.
Adapter init_adapter(AdapterKind kind, const AdapterConfig& config, std::uint64_t seed);

// --- Forward composition, generic over an op backend ------------------------
//
// A backend supplies the primitive ops over its handle type. EagerBackend
// computes on matrices directly; the tape backend (mode/graph.hpp) records
// the same composition onto a Tape, so both paths run identical arithmetic.

struct EagerBackend {
  using Handle = Matrix;
  Matrix matmul(const Matrix& a, const Matrix& b) const { return mode::matmul(a, b); }
  Matrix transpose(const Matrix& a) const { return mode::transpose(a); }
  Matrix add(const Matrix& a, const Matrix& b) const { return mode::add(a, b); }
  Matrix scale_rows(const Matrix& u, const Matrix& w) const { return mode::scale_rows(u, w); }
  Matrix slice_cols(const Matrix& a, std::size_t c0, std::size_t c1) const {
    return mode::slice_cols(a, c0, c1);
  }
  Matrix softmax_rows(const Matrix& a) const { return mode::softmax_rows(a); }
};

// y = x W0 + x A B^T
template <class B, class H = typename B::Handle>
H lora_apply(B& bk, const H& x, const H& w0, const LoraParams<H>& p) {
  return bk.add(bk.matmul(x, w0), bk.matmul(bk.matmul(x, p.down), bk.transpose(p.up)));
}

// y = x W0 + sum_i R^i(x) (x A^i B^i^T), R = softmax(x router) per token.
template <class B, class H = typename B::Handle>
H molora_apply(B& bk, const H& x, const H& w0, const MoLoraParams<H>& p) {
  H y = bk.matmul(x, w0);
  H weights = bk.softmax_rows(bk.matmul(x, p.router));
  for (std::size_t i = 0; i < p.experts.size(); ++i) {
    H update = bk.matmul(bk.matmul(x, p.experts[i].down), bk.transpose(p.experts[i].up));
    y = bk.add(y, bk.scale_rows(update, bk.slice_cols(weights, i, i + 1)));
  }
  return y;
}

// As molora_apply with the single shared down-projection.
template <class B, class H = typename B::Handle>
H molora_sd_apply(B& bk, const H& x, const H& w0, const MoLoraSDParams<H>& p) {
  H y = bk.matmul(x, w0);
  H hidden = bk.matmul(x, p.shared_down);
  H weights = bk.softmax_rows(bk.matmul(x, p.router));
  for (std::size_t i = 0; i < p.ups.size(); ++i) {
    H update = bk.matmul(hidden, bk.transpose(p.ups[i]));
    y = bk.add(y, bk.scale_rows(update, bk.slice_cols(weights, i, i + 1)));
  }
  return y;
}

// y = x W0 + sum_k sum_i R^i_k(x) (x A_k B_k^i^T) where A_k is the k-th
// p-column slice of the shared down-projection and each group routes
// independently. With p=1 the per-group update is the dyadic a_k (b_k^i)^T.
template <class B, class H = typename B::Handle>
H mode_apply(B& bk, const H& x, const H& w0, const ModeParams<H>& p, std::size_t expert_rank) {
  H y = bk.matmul(x, w0);
  for (std::size_t k = 0; k < p.groups.size(); ++k) {
    const ModeGroup<H>& group = p.groups[k];
    H hidden = bk.matmul(x, bk.slice_cols(p.shared_down, k * expert_rank, (k + 1) * expert_rank));
    H weights = bk.softmax_rows(bk.matmul(x, group.router));
    for (std::size_t i = 0; i < group.ups.size(); ++i) {
      H update = bk.matmul(hidden, bk.transpose(group.ups[i]));
      y = bk.add(y, bk.scale_rows(update, bk.slice_cols(weights, i, i + 1)));
    }
  }
  return y;
}

// --- Plain forward entry points ---------------------------------------------

Matrix lora_forward(const Matrix& x, const Matrix& w0, const LoraAdapter& adapter);
Matrix molora_forward(const Matrix& x, const Matrix& w0, const MoLoraAdapter& adapter);
Matrix molora_sd_forward(const Matrix& x, const Matrix& w0, const MoLoraSDAdapter& adapter);
Matrix mode_forward(const Matrix& x, const Matrix& w0, const ModeAdapter& adapter);
Matrix adapter_forward(const Matrix& x, const Matrix& w0, const Adapter& adapter);

// Sum of dyadic products over the rank columns: sum_i outer(a_i, b_i) = A B^T.
Matrix dyadic_reconstruct(const Matrix& a, const Matrix& b);

// Routing weights softmax(x_token router_k) for one group of a MoDE adapter.
// x_token is a single 1xP row; group is 0-based.
std::vector<double> route(const Matrix& x_token, const ModeAdapter& adapter, std::size_t group);

// --- Parameter accounting ----------------------------------------------------

struct ParamBreakdown {
  std::uint64_t down = 0;
  std::uint64_t up = 0;
  std::uint64_t router = 0;
  std::uint64_t total = 0;
};

ParamBreakdown param_count(AdapterKind kind, const AdapterConfig& config);

// Number of distinct hard (one-hot) routing assignments: m^(r/p).
std::uint64_t enumerate_compositions(const AdapterConfig& config);

// --- Uniform parameter access -------------------------------------------------

enum class ParamRole { down, up, router };

struct NamedParam {
  std::string name;
  ParamRole role;
  Matrix* matrix;
};

struct NamedParamView {
  std::string name;
  ParamRole role;
  const Matrix* matrix;
};

// All trainable matrices in a stable order (checkpoint and optimizer order).
std::vector<NamedParam> named_parameters(Adapter& adapter);
std::vector<NamedParamView> named_parameters(const Adapter& adapter);

// Total trainable scalar count of a constructed adapter.
std::uint64_t scalar_count(const Adapter& adapter);

}  // namespace mode

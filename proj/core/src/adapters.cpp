#include "mode/adapters.hpp"

#include <limits>

#include "mode/rng.hpp"

namespace mode {

std::string to_string(AdapterKind kind) {
  switch (kind) {
    case AdapterKind::lora: return "lora";
    case AdapterKind::molora: return "molora";
    case AdapterKind::molora_sd: return "molora_sd";
    case AdapterKind::mode: return "mode";
  }
  return "unknown";
}

AdapterKind adapter_kind_from_string(const std::string& s) {
  if (s == "lora") return AdapterKind::lora;
  if (s == "molora") return AdapterKind::molora;
  if (s == "molora_sd") return AdapterKind::molora_sd;
  if (s == "mode") return AdapterKind::mode;
  throw ConfigError("adapter kind: expected lora|molora|molora_sd|mode, got \"" + s + "\"");
}

void validate(const AdapterConfig& config) {
  if (config.input_dim == 0) throw ConfigError("input_dim: must be positive");
  if (config.output_dim == 0) throw ConfigError("output_dim: must be positive");
  if (config.lora_rank == 0) throw ConfigError("lora_rank: must be positive");
  if (config.num_experts == 0) throw ConfigError("num_experts: must be positive");
  if (config.expert_rank == 0) throw ConfigError("expert_rank: must be positive");
  if (config.expert_rank > config.lora_rank) {
    throw ConfigError("expert_rank: must not exceed lora_rank (" +
                      std::to_string(config.expert_rank) + " > " +
                      std::to_string(config.lora_rank) + ")");
  }
  if (config.lora_rank % config.expert_rank != 0) {
    throw ConfigError("expert_rank: lora_rank must be divisible by expert_rank (" +
                      std::to_string(config.lora_rank) + " % " +
                      std::to_string(config.expert_rank) + " != 0)");
  }
}

Adapter make_adapter(AdapterKind kind, const AdapterConfig& config) {
  validate(config);
  const std::size_t P = config.input_dim;
  const std::size_t Q = config.output_dim;
  const std::size_t r = config.lora_rank;
  const std::size_t m = config.num_experts;
  const std::size_t p = config.expert_rank;

  Adapter adapter;
  adapter.kind = kind;
  adapter.config = config;
  switch (kind) {
    case AdapterKind::lora:
      adapter.params = LoraAdapter{Matrix(P, r), Matrix(Q, r)};
      break;
    case AdapterKind::molora: {
      MoLoraAdapter a;
      a.experts.assign(m, LoraParams<Matrix>{Matrix(P, r), Matrix(Q, r)});
      a.router = Matrix(P, m);
      adapter.params = std::move(a);
      break;
    }
    case AdapterKind::molora_sd: {
      MoLoraSDAdapter a;
      a.shared_down = Matrix(P, r);
      a.ups.assign(m, Matrix(Q, r));
      a.router = Matrix(P, m);
      adapter.params = std::move(a);
      break;
    }
    case AdapterKind::mode: {
      ModeAdapter a;
      a.shared_down = Matrix(P, r);
      a.groups.assign(config.groups(), ModeGroup<Matrix>{std::vector<Matrix>(m, Matrix(Q, p)),
                                                         Matrix(P, m)});
      adapter.params = std::move(a);
      break;
    }
  }
  return adapter;
}

Adapter init_adapter(AdapterKind kind, const AdapterConfig& config, std::uint64_t seed) {
  Adapter adapter = make_adapter(kind, config);
  Rng rng(seed);
  for (const NamedParam& param : named_parameters(adapter)) {
    if (param.role == ParamRole::down) {
      for (double& v : param.matrix->entries()) v = rng.normal(0.0, 0.01);
    }
    // up-projections and routers stay zero
  }
  return adapter;
}

Matrix lora_forward(const Matrix& x, const Matrix& w0, const LoraAdapter& adapter) {
  EagerBackend bk;
  return lora_apply(bk, x, w0, adapter);
}

Matrix molora_forward(const Matrix& x, const Matrix& w0, const MoLoraAdapter& adapter) {
  EagerBackend bk;
  return molora_apply(bk, x, w0, adapter);
}

Matrix molora_sd_forward(const Matrix& x, const Matrix& w0, const MoLoraSDAdapter& adapter) {
  EagerBackend bk;
  return molora_sd_apply(bk, x, w0, adapter);
}

Matrix mode_forward(const Matrix& x, const Matrix& w0, const ModeAdapter& adapter) {
  if (adapter.groups.empty()) throw ShapeError("mode_forward: adapter has no groups");
  const std::size_t p = adapter.shared_down.cols() / adapter.groups.size();
  EagerBackend bk;
  return mode_apply(bk, x, w0, adapter, p);
}

Matrix adapter_forward(const Matrix& x, const Matrix& w0, const Adapter& adapter) {
  return std::visit(
      [&](const auto& params) -> Matrix {
        using T = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<T, LoraAdapter>) {
          return lora_forward(x, w0, params);
        } else if constexpr (std::is_same_v<T, MoLoraAdapter>) {
          return molora_forward(x, w0, params);
        } else if constexpr (std::is_same_v<T, MoLoraSDAdapter>) {
          return molora_sd_forward(x, w0, params);
        } else {
          return mode_forward(x, w0, params);
        }
      },
      adapter.params);
}

Matrix dyadic_reconstruct(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("dyadic_reconstruct: rank dimensions disagree: " + shape_str(a) + " vs " +
                     shape_str(b));
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.cols(); ++i) {
    const Matrix term = outer(a.column(i), b.column(i));
    out = add(out, term);
  }
  return out;
}

std::vector<double> route(const Matrix& x_token, const ModeAdapter& adapter, std::size_t group) {
  if (group >= adapter.groups.size()) {
    throw IndexError("route: group " + std::to_string(group) + " out of range [0, " +
                     std::to_string(adapter.groups.size()) + ")");
  }
  if (x_token.rows() != 1) {
    throw ShapeError("route: expected a single 1xP token row, got " + shape_str(x_token));
  }
  const Matrix logits = matmul(x_token, adapter.groups[group].router);
  return softmax_row(logits.row(0));
}

ParamBreakdown param_count(AdapterKind kind, const AdapterConfig& config) {
  validate(config);
  const std::uint64_t P = config.input_dim;
  const std::uint64_t Q = config.output_dim;
  const std::uint64_t r = config.lora_rank;
  const std::uint64_t m = config.num_experts;
  const std::uint64_t g = config.groups();

  ParamBreakdown out;
  switch (kind) {
    case AdapterKind::lora:
      out.down = P * r;
      out.up = Q * r;
      out.router = 0;
      break;
    case AdapterKind::molora:
      out.down = m * P * r;
      out.up = m * Q * r;
      out.router = P * m;
      break;
    case AdapterKind::molora_sd:
      out.down = P * r;
      out.up = m * Q * r;
      out.router = P * m;
      break;
    case AdapterKind::mode:
      out.down = P * r;
      out.up = m * r * Q;  // g groups x m experts x (Q*p) = m*(r/p)*Q*p
      out.router = g * P * m;
      break;
  }
  out.total = out.down + out.up + out.router;
  return out;
}

std::uint64_t enumerate_compositions(const AdapterConfig& config) {
  validate(config);
  const std::uint64_t m = config.num_experts;
  std::uint64_t result = 1;
  for (std::size_t k = 0; k < config.groups(); ++k) {
    if (m != 0 && result > std::numeric_limits<std::uint64_t>::max() / m) {
      throw OverflowError("enumerate_compositions: m^(r/p) overflows 64 bits (m=" +
                          std::to_string(m) + ", groups=" + std::to_string(config.groups()) + ")");
    }
    result *= m;
  }
  return result;
}

namespace {

template <class AdapterT, class ParamT>
std::vector<ParamT> collect_params(AdapterT& adapter) {
  std::vector<ParamT> out;
  std::visit(
      [&](auto& params) {
        using T = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<T, LoraAdapter>) {
          out.push_back({"down", ParamRole::down, &params.down});
          out.push_back({"up", ParamRole::up, &params.up});
        } else if constexpr (std::is_same_v<T, MoLoraAdapter>) {
          for (std::size_t i = 0; i < params.experts.size(); ++i) {
            const std::string prefix = "expert" + std::to_string(i) + ".";
            out.push_back({prefix + "down", ParamRole::down, &params.experts[i].down});
            out.push_back({prefix + "up", ParamRole::up, &params.experts[i].up});
          }
          out.push_back({"router", ParamRole::router, &params.router});
        } else if constexpr (std::is_same_v<T, MoLoraSDAdapter>) {
          out.push_back({"shared_down", ParamRole::down, &params.shared_down});
          for (std::size_t i = 0; i < params.ups.size(); ++i) {
            out.push_back({"expert" + std::to_string(i) + ".up", ParamRole::up, &params.ups[i]});
          }
          out.push_back({"router", ParamRole::router, &params.router});
        } else {
          out.push_back({"shared_down", ParamRole::down, &params.shared_down});
          for (std::size_t k = 0; k < params.groups.size(); ++k) {
            const std::string prefix = "group" + std::to_string(k) + ".";
            for (std::size_t i = 0; i < params.groups[k].ups.size(); ++i) {
              out.push_back({prefix + "expert" + std::to_string(i) + ".up", ParamRole::up,
                             &params.groups[k].ups[i]});
            }
            out.push_back({prefix + "router", ParamRole::router, &params.groups[k].router});
          }
        }
      },
      adapter.params);
  return out;
}

}  // namespace

std::vector<NamedParam> named_parameters(Adapter& adapter) {
  return collect_params<Adapter, NamedParam>(adapter);
}

std::vector<NamedParamView> named_parameters(const Adapter& adapter) {
  return collect_params<const Adapter, NamedParamView>(adapter);
}

std::uint64_t scalar_count(const Adapter& adapter) {
  std::uint64_t total = 0;
  for (const NamedParamView& p : named_parameters(adapter)) total += p.matrix->size();
  return total;
}

}  // namespace mode

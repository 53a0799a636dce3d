#include "mode/budget.hpp"

#include <algorithm>

#include "mode/analysis.hpp"

namespace mode {

std::vector<BudgetRow> budget_search(const BudgetQuery& query) {
  if (query.input_dim == 0) throw ConfigError("input_dim: must be positive");
  if (query.output_dim == 0) throw ConfigError("output_dim: must be positive");
  if (query.budget == 0) throw ConfigError("budget: must be positive");
  if (query.backbone_nonembedding == 0) {
    throw ConfigError("backbone_nonembedding: must be positive");
  }
  if (query.families.empty()) throw ConfigError("families: must not be empty");
  if (query.r_choices.empty()) throw ConfigError("r_choices: must not be empty");

  std::vector<BudgetRow> rows;
  for (AdapterKind family : query.families) {
    for (std::size_t r : query.r_choices) {
      if (r == 0) throw ConfigError("r_choices: ranks must be positive");

      // Non-MoDE families have a single routing group; p carries no meaning
      // beyond the config invariant, so it is pinned to r.
      std::vector<std::size_t> p_values;
      if (family == AdapterKind::mode) {
        for (std::size_t p : query.p_choices) {
          if (p >= 1 && p <= r && r % p == 0) p_values.push_back(p);
        }
      } else {
        p_values.push_back(r);
      }

      for (std::size_t p : p_values) {
        // total(m) = base + m * per_expert for every family.
        AdapterConfig probe{query.input_dim, query.output_dim, r, 1, p};
        const ParamBreakdown at_one = param_count(family, probe);
        probe.num_experts = 2;
        const ParamBreakdown at_two = param_count(family, probe);
        const std::uint64_t per_expert = at_two.total - at_one.total;
        const std::uint64_t base = at_one.total - per_expert;

        std::size_t best_m = 0;
        if (family == AdapterKind::lora) {
          if (at_one.total <= query.budget) best_m = 1;
        } else if (base < query.budget && per_expert > 0) {
          best_m = static_cast<std::size_t>((query.budget - base) / per_expert);
        }
        if (best_m == 0) continue;

        AdapterConfig config{query.input_dim, query.output_dim, r, best_m, p};
        const ParamBreakdown counts = param_count(family, config);
        rows.push_back(BudgetRow{family, best_m, r, p, counts.total,
                                 param_percent(counts.total, query.backbone_nonembedding),
                                 enumerate_compositions(config)});
      }
    }
  }
  if (rows.empty()) {
    throw InfeasibleError("budget_search: no configuration fits within budget " +
                          std::to_string(query.budget));
  }
  return rows;
}

}  // namespace mode

#pragma once

#include <cstdint>
#include <vector>

#include "mode/adapters.hpp"

namespace mode {

struct BudgetRow {
  AdapterKind family = AdapterKind::lora;
  std::size_t num_experts = 1;
  std::size_t lora_rank = 0;
  std::size_t expert_rank = 0;
  std::uint64_t total = 0;
  double percent = 0.0;
  std::uint64_t compositions = 0;
};

struct BudgetQuery {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::uint64_t budget = 0;
  std::vector<AdapterKind> families;
  std::vector<std::size_t> r_choices;
  std::vector<std::size_t> p_choices;  // used by the mode family only
  std::uint64_t backbone_nonembedding = 0;
};

// For each family and (r, p), the largest expert count m whose total stays
// within the budget (LoRA rows are plain feasibility checks). Throws
// InfeasibleError when no configuration fits.
std::vector<BudgetRow> budget_search(const BudgetQuery& query);

}  // namespace mode

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mode/adapters.hpp"

namespace mode {

enum class SliceKind { down, up };

std::string to_string(SliceKind kind);
SliceKind slice_kind_from_string(const std::string& s);

// One column of a projection matrix, tagged by its source task and its
// position along the rank dimension.
struct RankSlice {
  std::vector<double> v;
  std::string task;
  std::size_t rank_index = 0;  // 0-based column j
  SliceKind kind = SliceKind::down;
};

struct RankSliceSet {
  std::vector<RankSlice> slices;
  std::size_t dim = 0;
};

// The r columns of each adapter's down (or up) projection, labelled
// (task, rank_index). All adapters must share (P, Q, r).
RankSliceSet collect_rank_slices(std::span<const LoraAdapter> adapters,
                                 std::span<const std::string> labels, SliceKind kind);

struct PcaModel {
  std::vector<double> mean;                 // d
  Matrix components;                        // k x d, orthonormal rows
  std::vector<double> explained_variance;   // fractions, nonincreasing
};

struct PcaResult {
  PcaModel model;
  Matrix projections;  // n x k
};

// PCA via singular decomposition of the mean-centered data matrix.
// Deterministic sign convention: each component's largest-magnitude
// coordinate is made positive.
PcaResult pca(const Matrix& points, std::size_t k);
PcaResult pca(const RankSliceSet& slices, std::size_t k = 3);

// (mean within-label pairwise distance) / (mean between-label pairwise
// distance); lower means tighter label clusters. Needs >= 2 labels with
// >= 2 points each.
double cluster_separation(const Matrix& points, std::span<const std::string> labels);

// (wins + 0.5 * ties) / n where a win is a[t] > b[t].
double win_rate(std::span<const double> a, std::span<const double> b);

struct SignificanceResult {
  bool significant = false;
  double p_value = 1.0;
};

// One-sided exact binomial tail P[X >= wins | Bin(n, p0)]; significant iff
// p_value < 1 - confidence. Ties must be excluded from n by the caller.
SignificanceResult binomial_significance(std::uint64_t wins, std::uint64_t n, double p0 = 0.5,
                                         double confidence = 0.99);

// 100 * adapter_total / backbone_nonembedding.
double param_percent(std::uint64_t adapter_total, std::uint64_t backbone_nonembedding);

}  // namespace mode

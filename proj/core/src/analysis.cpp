#include "mode/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace mode {

std::string to_string(SliceKind kind) { return kind == SliceKind::down ? "down" : "up"; }

SliceKind slice_kind_from_string(const std::string& s) {
  if (s == "down") return SliceKind::down;
  if (s == "up") return SliceKind::up;
  throw ConfigError("kind: expected down|up, got \"" + s + "\"");
}

RankSliceSet collect_rank_slices(std::span<const LoraAdapter> adapters,
                                 std::span<const std::string> labels, SliceKind kind) {
  if (adapters.size() != labels.size()) {
    throw ShapeError("collect_rank_slices: " + std::to_string(adapters.size()) +
                     " adapters vs " + std::to_string(labels.size()) + " labels");
  }
  if (adapters.empty()) throw ConfigError("collect_rank_slices: no adapters");

  const Matrix& first = kind == SliceKind::down ? adapters[0].down : adapters[0].up;
  RankSliceSet out;
  out.dim = first.rows();
  const std::size_t rank = first.cols();
  for (std::size_t a = 0; a < adapters.size(); ++a) {
    const Matrix& source = kind == SliceKind::down ? adapters[a].down : adapters[a].up;
    if (source.rows() != out.dim || source.cols() != rank) {
      throw ShapeError("collect_rank_slices: adapter " + std::to_string(a) + " shape " +
                       shape_str(source) + " differs from " + std::to_string(out.dim) + "x" +
                       std::to_string(rank));
    }
    for (std::size_t j = 0; j < rank; ++j) {
      out.slices.push_back(RankSlice{source.column(j), labels[a], j, kind});
    }
  }
  return out;
}

namespace {

// One-sided Jacobi: rotates column pairs of `work` until they are mutually
// orthogonal; the accumulated rotation is the right singular basis.
struct JacobiSvd {
  std::vector<double> singular_values;  // descending
  Matrix right_vectors;                 // d x d, column i pairs with sigma_i
};

JacobiSvd jacobi_svd(const Matrix& input) {
  const std::size_t n = input.rows(), d = input.cols();
  Matrix work = input;
  Matrix v = Matrix::identity(d);

  const double eps = 1e-15;
  double frob2 = 0.0;
  for (double x : work.entries()) frob2 += x * x;
  const double threshold = eps * std::max(frob2, 1e-300);

  for (int sweep = 0; sweep < 100; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double cp = work.at(i, p), cq = work.at(i, q);
          app += cp * cp;
          aqq += cq * cq;
          apq += cp * cq;
        }
        if (apq * apq <= threshold * 1e-2 || std::abs(apq) <= eps * std::sqrt(app * aqq)) {
          continue;
        }
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < n; ++i) {
          const double cp = work.at(i, p), cq = work.at(i, q);
          work.at(i, p) = c * cp - s * cq;
          work.at(i, q) = s * cp + c * cq;
        }
        for (std::size_t i = 0; i < d; ++i) {
          const double vp = v.at(i, p), vq = v.at(i, q);
          v.at(i, p) = c * vp - s * vq;
          v.at(i, q) = s * vp + c * vq;
        }
        rotated = true;
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(d);
  for (std::size_t j = 0; j < d; ++j) {
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm2 += work.at(i, j) * work.at(i, j);
    sigma[j] = std::sqrt(norm2);
  }
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

  JacobiSvd out;
  out.singular_values.resize(d);
  out.right_vectors = Matrix(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    out.singular_values[j] = sigma[order[j]];
    for (std::size_t i = 0; i < d; ++i) out.right_vectors.at(i, j) = v.at(i, order[j]);
  }
  return out;
}

}  // namespace

PcaResult pca(const Matrix& points, std::size_t k) {
  const std::size_t n = points.rows(), d = points.cols();
  if (k == 0) throw ConfigError("k: must be positive");
  if (k > d) {
    throw ConfigError("k: must not exceed data dimension (" + std::to_string(k) + " > " +
                      std::to_string(d) + ")");
  }
  if (n < k + 1) {
    throw ConfigError("pca: need at least k+1 points, got " + std::to_string(n));
  }

  PcaResult out;
  out.model.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out.model.mean[j] += points.at(i, j);
  for (double& m : out.model.mean) m /= static_cast<double>(n);

  Matrix centered(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) centered.at(i, j) = points.at(i, j) - out.model.mean[j];

  const JacobiSvd svd = jacobi_svd(centered);

  double total_variance = 0.0;
  for (double s : svd.singular_values) total_variance += s * s;

  out.model.components = Matrix(k, d);
  out.model.explained_variance.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    // Sign convention: largest-magnitude coordinate is positive.
    std::size_t argmax = 0;
    double best = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double a = std::abs(svd.right_vectors.at(j, c));
      if (a > best) {
        best = a;
        argmax = j;
      }
    }
    const double flip = svd.right_vectors.at(argmax, c) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      out.model.components.at(c, j) = flip * svd.right_vectors.at(j, c);
    }
    const double s = svd.singular_values[c];
    out.model.explained_variance[c] = total_variance > 0.0 ? (s * s) / total_variance : 0.0;
  }

  out.projections = matmul(centered, transpose(out.model.components));
  return out;
}

PcaResult pca(const RankSliceSet& slices, std::size_t k) {
  if (slices.slices.empty()) throw ConfigError("pca: empty slice set");
  Matrix points(slices.slices.size(), slices.dim);
  for (std::size_t i = 0; i < slices.slices.size(); ++i) {
    if (slices.slices[i].v.size() != slices.dim) {
      throw ShapeError("pca: slice " + std::to_string(i) + " has length " +
                       std::to_string(slices.slices[i].v.size()) + ", expected " +
                       std::to_string(slices.dim));
    }
    for (std::size_t j = 0; j < slices.dim; ++j) points.at(i, j) = slices.slices[i].v[j];
  }
  return pca(points, k);
}

double cluster_separation(const Matrix& points, std::span<const std::string> labels) {
  if (labels.size() != points.rows()) {
    throw ShapeError("cluster_separation: " + std::to_string(points.rows()) + " points vs " +
                     std::to_string(labels.size()) + " labels");
  }
  std::map<std::string, std::size_t> counts;
  for (const std::string& l : labels) counts[l]++;
  if (counts.size() < 2) throw ConfigError("cluster_separation: need at least 2 labels");
  for (const auto& [label, count] : counts) {
    if (count < 2) {
      throw ConfigError("cluster_separation: label \"" + label + "\" has fewer than 2 points");
    }
  }

  double within_sum = 0.0, between_sum = 0.0;
  std::size_t within_n = 0, between_n = 0;
  const std::size_t n = points.rows(), d = points.cols();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double dist2 = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = points.at(i, c) - points.at(j, c);
        dist2 += diff * diff;
      }
      const double dist = std::sqrt(dist2);
      if (labels[i] == labels[j]) {
        within_sum += dist;
        ++within_n;
      } else {
        between_sum += dist;
        ++between_n;
      }
    }
  }
  const double between_mean = between_sum / static_cast<double>(between_n);
  if (between_mean == 0.0) {
    throw ConfigError("cluster_separation: degenerate geometry (all points coincide)");
  }
  return (within_sum / static_cast<double>(within_n)) / between_mean;
}

double win_rate(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw ShapeError("win_rate: score lists must have equal nonzero length (" +
                     std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  double score = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) {
      score += 1.0;
    } else if (a[i] == b[i]) {
      score += 0.5;
    }
  }
  return score / static_cast<double>(a.size());
}

SignificanceResult binomial_significance(std::uint64_t wins, std::uint64_t n, double p0,
                                         double confidence) {
  if (n == 0) throw ConfigError("n: must be positive");
  if (wins > n) throw ConfigError("wins: must not exceed n");
  if (!(p0 > 0.0 && p0 < 1.0)) throw ConfigError("p0: must be in (0, 1)");

  // Exact tail sum via log binomial coefficients.
  double p_value = 0.0;
  const double log_p = std::log(p0);
  const double log_q = std::log1p(-p0);
  const double log_n_fact = std::lgamma(static_cast<double>(n) + 1.0);
  for (std::uint64_t k = wins; k <= n; ++k) {
    const double log_term = log_n_fact - std::lgamma(static_cast<double>(k) + 1.0) -
                            std::lgamma(static_cast<double>(n - k) + 1.0) +
                            static_cast<double>(k) * log_p +
                            static_cast<double>(n - k) * log_q;
    p_value += std::exp(log_term);
  }
  p_value = std::min(p_value, 1.0);
  return SignificanceResult{p_value < 1.0 - confidence, p_value};
}

double param_percent(std::uint64_t adapter_total, std::uint64_t backbone_nonembedding) {
  if (backbone_nonembedding == 0) throw ConfigError("backbone_nonembedding: must be positive");
  return 100.0 * static_cast<double>(adapter_total) /
         static_cast<double>(backbone_nonembedding);
}

}  // namespace mode

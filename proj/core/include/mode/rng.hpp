#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "mode/matrix.hpp"

namespace mode {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);

// Seed-splitting rule used everywhere a component needs its own stream:
// derive_seed(master, label) = splitmix64(master XOR fnv1a64(label)).
// Stable across runs and platforms; labels are short strings like "data"
// or "train:molora_sd".
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

// Deterministic random stream. Normal variates use Box-Muller on top of
// mt19937_64 rather than std::normal_distribution, whose algorithm is
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Unbiased integer in [0, n) via rejection sampling.
  std::uint64_t below(std::uint64_t n);

  double normal(double mean = 0.0, double stddev = 1.0);

  Matrix normal_matrix(std::size_t rows, std::size_t cols, double stddev = 1.0);

  template <class T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::swap(v[i], v[below(i + 1)]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mode

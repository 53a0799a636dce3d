#pragma once

#include <cstdint>
#include <filesystem>

#include "mode/adapters.hpp"

namespace mode {

struct Checkpoint {
  Adapter adapter;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
};

// Single JSON document: {kind, config{P,Q,r,m,p}, matrices as named arrays of
// row-major numbers, seed, step}. Doubles are written in shortest round-trip
// form, so save/load is lossless.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mode

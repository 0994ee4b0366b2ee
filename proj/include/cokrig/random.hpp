#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace cokrig {

// Independent deterministic stream for (master seed, tag...). Used to split one seed across
// levels, starts, replicates and query points.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::initializer_list<std::uint32_t> tags) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  words.insert(words.end(), tags.begin(), tags.end());
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace cokrig

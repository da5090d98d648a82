#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace d2l::detail {

// Independent, reproducible stream derived from a base seed and stream tags.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  for (std::uint64_t t : tags) {
    words.push_back(static_cast<std::uint32_t>(t));
    words.push_back(static_cast<std::uint32_t>(t >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

enum StreamTag : std::uint64_t {
  kNoiseStream = 0x6e6f697365,
  kBlobGeometry = 0x67656f6d,
  kBlobSamples = 0x73616d70,
  kBatchStream = 0x6261746368,
  kLidStream = 0x6c6964,
};

}  // namespace d2l::detail

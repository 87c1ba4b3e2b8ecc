#pragma once

#include <cstdint>
#include <random>

namespace dea {

using Rng = std::mt19937_64;

// Independent random streams of one run. Each stream is seeded from
// (run seed, offset) through std::seed_seq, so no two streams share state.
enum class Stream : std::uint32_t {
  kInit = 1,          // network parameter initialization
  kEnv = 2,           // environment resets
  kExploration = 3,   // warmup actions and behaviour-policy noise
  kBatch = 4,         // replay mini-batch indices
  kSubset = 5,        // REDQ subset draws
  kLearnerNoise = 6,  // a' ~ pi(.|s') for targets and reparameterized actor noise
  kEval = 7,          // evaluation episode resets
};

inline Rng make_stream(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

}  // namespace dea

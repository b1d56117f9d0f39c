#pragma once

// Deterministic RNG substream derivation.  Every stochastic task derives its
// generator from (seed, stream tag, index) so results do not depend on how
// work is split across workers.

#include <cstdint>
#include <random>

namespace modalme {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t index = 0) {
  return splitmix64(splitmix64(seed ^ splitmix64(stream)) + index);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream,
                                std::uint64_t index = 0) {
  return std::mt19937_64(derive_seed(seed, stream, index));
}

// Stream tags for the independent random sources of a run.
namespace streams {
constexpr std::uint64_t t_variates = 1;
constexpr std::uint64_t simex = 2;
constexpr std::uint64_t bootstrap = 3;
constexpr std::uint64_t bootstrap_fit = 7;
constexpr std::uint64_t design = 4;
constexpr std::uint64_t known_sigma = 5;
constexpr std::uint64_t study = 6;
}  // namespace streams

}  // namespace modalme

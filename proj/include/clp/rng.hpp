#pragma once

// Seed derivation for independent, reproducible random streams.
// Stream (seed, i, j, ...) is an mt19937_64 seeded by SplitMix64-mixing the
// seed with each index in turn, so streams can be created in any order.

#include <cstdint>
#include <initializer_list>
#include <random>

namespace clp {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(seed);
  for (auto idx : path) h = splitmix64(h ^ splitmix64(idx + 0x632be59bd9b4e019ULL));
  return h;
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {}) {
  return Engine(stream_seed(seed, path));
}

inline double uniform01(Engine& eng) { return std::uniform_real_distribution<double>(0.0, 1.0)(eng); }

}  // namespace clp

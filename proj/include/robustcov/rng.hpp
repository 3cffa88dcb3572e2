#pragma once

#include <cstdint>
#include <random>

namespace robustcov {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to decorrelate user seeds and stream indices
/// before feeding them to the Mersenne engine.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

/// Independent substream for work item `index` under a common seed. Each
/// parallel replication draws from its own substream so results do not depend
/// on the execution schedule.
inline Rng substream(std::uint64_t seed, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index * 0x9e3779b97f4a7c15ull + 1)));
}

}  // namespace robustcov

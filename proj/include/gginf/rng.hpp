#pragma once

#include <cstdint>
#include <random>

namespace gginf {

using Engine = std::mt19937_64;

// SplitMix64 finalizer. Used to turn (seed, index) pairs into well-separated
// engine seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of the child stream `index` of `seed`. Depends only on the pair, so a
// replication draws the same numbers no matter which worker runs it.
constexpr std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline Engine child_engine(std::uint64_t seed, std::uint64_t index) {
  return Engine{child_seed(seed, index)};
}

// Uniform on the open interval (0, 1): odd multiples of 2^-53. Both u and
// 1 - u are exactly representable, so complement-based quantiles stay exact.
inline double open_uniform(Engine& eng) {
  const std::uint64_t k = eng() >> 12;
  return static_cast<double>(2 * k + 1) * 0x1.0p-53;
}

}  // namespace gginf

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace quantstab {

/// splitmix64 finalizer; used to derive independent stream seeds from counters.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for the stream keyed by (seed, k0, k1, ...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(seed);
  for (auto k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

inline std::mt19937_64 keyed_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  return std::mt19937_64(derive_seed(seed, keys));
}

}  // namespace quantstab

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace brw {

using Rng = std::mt19937_64;

// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Hashes a master seed and a tuple of indices into a child seed. Streams
/// derived from distinct index tuples are treated as independent.
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> indices) noexcept {
  std::uint64_t h = mix64(seed ^ 0x5851f42d4c957f2dULL);
  for (std::uint64_t i : indices) h = mix64(h ^ mix64(i + 0x2545f4914f6cdd1dULL));
  return h;
}

inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> indices) {
  return Rng{derive_seed(seed, indices)};
}

/// Uniform draw in the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  // 53 random bits shifted by half an ulp keep both endpoints excluded.
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace brw

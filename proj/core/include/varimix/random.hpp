#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace varimix {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to turn (seed, counter) tuples into
/// statistically independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive a substream seed from a parent seed and any number of counters.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = mix64(seed);
  for (const auto k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  return Rng(derive_seed(seed, keys));
}

/// Uniform index in [0, n) from a counter-based hash; no generator state.
inline std::uint64_t hashed_index(std::uint64_t seed,
                                  std::initializer_list<std::uint64_t> keys,
                                  std::uint64_t n) noexcept {
  // Lemire's multiply-shift reduction; bias is below 2^-32 for the sizes used here.
  const std::uint64_t h = derive_seed(seed, keys);
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(h) * n) >> 64);
}

// Stream tags keep the derived substreams of one master seed apart.
namespace stream {
inline constexpr std::uint64_t kVariants = 1;
inline constexpr std::uint64_t kAbundances = 2;
inline constexpr std::uint64_t kPixelDraw = 3;
inline constexpr std::uint64_t kNoise = 4;
inline constexpr std::uint64_t kPurePixels = 5;
inline constexpr std::uint64_t kExtraction = 6;
inline constexpr std::uint64_t kClustering = 7;
inline constexpr std::uint64_t kSolver = 8;
}  // namespace stream

}  // namespace varimix

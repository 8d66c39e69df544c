#pragma once

#include <cstdint>
#include <limits>

namespace wrfcm {

/// splitmix64 generator (public-domain mixer). Satisfies
/// UniformRandomBitGenerator, so the <random> distributions work on top of
/// it. Cheap to construct, which makes one independent stream per pixel
/// practical.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<std::uint64_t>::max();
  }

  constexpr result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Seed for an independent substream (e.g. one stream per pixel). For a
/// fixed base seed the mapping stream -> substream seed is injective, so
/// per-pixel draws stay decorrelated and reproducible no matter in which
/// order (or how parallel) pixels are processed.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 outer(seed);
  SplitMix64 inner(outer() + stream);
  return inner();
}

}  // namespace wrfcm

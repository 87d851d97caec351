#pragma once

#include <array>
#include <cstdint>

namespace btrisk {

/// SplitMix64 finalizer. Used to derive independent stream keys.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// xoshiro256** generator keyed by (seed, stream).
///
/// Every sampled quantity in the toolkit (episode i, prior draw i, scene
/// sample i) gets its own stream, so results do not depend on how the index
/// range is split across threads. All distributions below are implemented
/// here rather than taken from <random>, whose distribution algorithms are
/// implementation-defined; output is identical on every platform.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint64_t next() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept;
  /// Uniform integer on [lo, hi], both inclusive. Requires lo <= hi.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept;
  bool bernoulli(double p) noexcept;
  /// Poisson(mean) count. Exact for any finite mean >= 0.
  std::uint64_t poisson(double mean) noexcept;

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace btrisk

#include "btrisk/random.hpp"

#include <cmath>

namespace btrisk {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

// Knuth's multiplication method stays accurate while exp(-mean) is well
// above the smallest normal double; larger means are split into pieces.
constexpr double kPoissonPiece = 30.0;

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t key = splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL);
  for (auto& word : s_) {
    key = splitmix64(key);
    word = key;
  }
}

std::uint64_t Rng::next() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() noexcept {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) noexcept {
  const double x = lo + (hi - lo) * uniform();
  // Rounding can land exactly on hi for some (lo, hi) pairs.
  return x < hi ? x : lo;
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
  const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
  if (span == ~std::uint64_t{0}) return static_cast<std::int64_t>(next());
  const std::uint64_t range = span + 1;
  // Rejection sampling on the largest multiple of range.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % range);
  std::uint64_t x = next();
  while (x >= limit) x = next();
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(lo) + x % range);
}

bool Rng::bernoulli(double p) noexcept { return uniform() < p; }

std::uint64_t Rng::poisson(double mean) noexcept {
  if (!(mean > 0.0)) return 0;
  std::uint64_t total = 0;
  while (mean > 0.0) {
    const double piece = mean > kPoissonPiece ? kPoissonPiece : mean;
    mean -= piece;
    const double limit = std::exp(-piece);
    double prod = uniform();
    while (prod > limit) {
      ++total;
      prod *= uniform();
    }
  }
  return total;
}

}  // namespace btrisk

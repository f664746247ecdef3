#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace grpca {

/// Deterministic random stream: xoshiro256** seeded through splitmix64.
///
/// Both algorithms are fully specified integer recurrences, so a seed gives
/// the same stream on every platform and compiler. Normal deviates use the
/// basic Box-Muller transform; the second deviate of each pair is cached and
/// returned by the next call. Uniform integers use rejection sampling on the
/// top bits, never the `<random>` distributions (their output is
/// implementation-defined).
///
/// `substream(key)` derives an independent generator for a logical task
/// (sweep point, fold, ...) from the root seed and the key only, so parallel
/// workers stay reproducible regardless of scheduling.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed = 0) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  std::uint64_t seed() const noexcept { return seed_; }

  RandomSource substream(std::uint64_t key) const {
    std::uint64_t sm = seed_ ^ 0xA0761D6478BD642FULL;
    const std::uint64_t a = splitmix64(sm);
    std::uint64_t km = key + 0xE7037ED1A0B428DBULL;
    const std::uint64_t b = splitmix64(km);
    return RandomSource(a ^ rotl(b, 23) ^ (b >> 7));
  }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer on [0, bound). `bound` must be positive.
  std::uint64_t uniform_int(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    const std::uint64_t limit = (~std::uint64_t{0} / bound) * bound;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % bound;
  }

  bool bernoulli(double prob) noexcept { return uniform() < prob; }

  double normal() noexcept {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

  static std::uint64_t splitmix64(std::uint64_t& x) noexcept {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t state_[4]{};
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace grpca

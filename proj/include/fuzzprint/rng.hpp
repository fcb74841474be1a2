#pragma once

#include <cstdint>

namespace fuzzprint {

/// xorshift64* generator (Vigna 2014): shifts 12/25/27, multiplier
/// 0x2545F4914F6CDD1D. A zero seed is replaced by 0x9E3779B97F4A7C15 because
/// the all-zero state is a fixed point. The stream is identical on every
/// platform, which is what makes mutation corpora portable.
class Xorshift64Star {
 public:
  static constexpr std::uint64_t kZeroSeedReplacement = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kMultiplier = 0x2545F4914F6CDD1DULL;

  explicit constexpr Xorshift64Star(std::uint64_t seed) noexcept
      : state_(seed == 0 ? kZeroSeedReplacement : seed) {}

  constexpr std::uint64_t next() noexcept {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * kMultiplier;
  }

  /// Uniform integer in [0, bound) by rejection; bound must be > 0.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    // values under `threshold` would bias the low residues
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace fuzzprint

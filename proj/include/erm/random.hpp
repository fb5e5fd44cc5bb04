#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace erm {

/// SplitMix64 (Steele, Lea, Flood 2014). Used for seeding and for deriving
/// per-realization seeds from a master seed.
class SplitMix64 {
public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  constexpr std::uint64_t operator()() noexcept {
    state_ += kGamma;
    return mix(state_);
  }

  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

private:
  std::uint64_t state_;
};

/// Seed of realization `index` under `master`: the index-th output of a
/// SplitMix64 stream started at `master`, i.e. mix(master + (index+1)*gamma).
/// The map index -> seed is injective for a fixed master.
constexpr std::uint64_t realization_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return SplitMix64::mix(master + (index + 1) * SplitMix64::kGamma);
}

/// xoshiro256** 1.0 (Blackman, Vigna 2018), state filled from SplitMix64.
/// Satisfies UniformRandomBitGenerator, so it plugs into <random> distributions.
class Xoshiro256 {
public:
  using result_type = std::uint64_t;

  explicit constexpr Xoshiro256(std::uint64_t seed) noexcept : s_{} {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm();
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
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

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_;
};

} // namespace erm

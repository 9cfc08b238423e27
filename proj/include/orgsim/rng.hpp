#pragma once

// Portable pseudo-random streams. All simulator randomness goes through
// these so event traces are reproducible bit-for-bit on any platform.
//
//   seeding : SplitMix64 (Vigna), increment 0x9E3779B97F4A7C15
//   stream  : xoshiro256** (Blackman & Vigna), rotl(s1*5, 7)*9
//   streams : stream_seed(master, name) = splitmix(master ^ fnv1a64(name))

#include <array>
#include <cstdint>
#include <string_view>

#include "orgsim/digest.hpp"

namespace orgsim {

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}
  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept { reseed(seed); }

  void reseed(std::uint64_t seed) noexcept {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm.next();
  }

  std::uint64_t next() noexcept {
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

  /// Uniform in [0, 1) with 53 bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] (inclusive), unbiased by rejection.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) noexcept {
    const std::uint64_t span = hi - lo + 1;
    if (span == 0) return next();
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % span);
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return lo + x % span;
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
  std::array<std::uint64_t, 4> s_{};
};

inline std::uint64_t stream_seed(std::uint64_t master, std::string_view name) noexcept {
  return SplitMix64(master ^ fnv1a64(name)).next();
}

inline std::uint64_t stream_seed(std::uint64_t master, std::string_view name, std::uint64_t index) noexcept {
  return SplitMix64(stream_seed(master, name) ^ (index * 0xD1B54A32D192ED03ull)).next();
}

inline Rng named_stream(std::uint64_t master, std::string_view name) { return Rng(stream_seed(master, name)); }

}  // namespace orgsim

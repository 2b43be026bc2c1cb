// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic RNG streams. std::uniform_real_distribution and friends are
// implementation-defined, so all draws here are built from raw 64-bit output;
// a given (seed, stream) pair yields the same byte-identical sequence on every
// run, which the reproducibility contract depends on.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace afdc {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// xoshiro256** seeded through splitmix64.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  // Derives an independent stream for a named purpose. Purpose ids are fixed
  // constants at the call sites; index separates per-item streams.
  static RngStream derive(std::uint64_t seed, std::uint64_t purpose,
                          std::uint64_t index = 0) {
    std::uint64_t sm = seed;
    std::uint64_t a = splitmix64(sm);
    sm = a ^ (purpose * 0x9e3779b97f4a7c15ull);
    std::uint64_t b = splitmix64(sm);
    sm = b ^ (index * 0xd1342543de82ef95ull);
    return RngStream(splitmix64(sm));
  }

  std::uint64_t next_u64() {
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

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] inclusive (unbiased enough for desk scale).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  // Box-Muller; consumes two uniforms per pair, caches the second.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Fixed purpose ids for RngStream::derive; never renumber, logs depend on it.
namespace rng_purpose {
inline constexpr std::uint64_t kParamInit = 1;
inline constexpr std::uint64_t kSynthRecord = 2;
inline constexpr std::uint64_t kShuffle = 3;
inline constexpr std::uint64_t kWarpSize = 4;
inline constexpr std::uint64_t kSplit = 5;
inline constexpr std::uint64_t kSelfTest = 6;
}  // namespace rng_purpose

}  // namespace afdc

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <string_view>

namespace mmtsa {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// FNV-1a over the bytes of a label, used to turn names into stream keys.
constexpr std::uint64_t hash_label(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// A stream key built by folding labels into a root seed. Two keys that
/// differ in any component give statistically independent streams, so
/// adding a modality or a segment never shifts the draws of another.
class StreamKey {
 public:
  explicit constexpr StreamKey(std::uint64_t seed) : value_(mix64(seed ^ 0x6a09e667f3bcc909ull)) {}

  constexpr StreamKey with(std::uint64_t component) const {
    StreamKey k = *this;
    k.value_ = mix64(k.value_ + 0x9e3779b97f4a7c15ull * (component + 1));
    return k;
  }
  constexpr StreamKey with(std::string_view label) const { return with(hash_label(label)); }

  constexpr std::uint64_t value() const { return value_; }

 private:
  std::uint64_t value_;
};

/// Counter-based generator: output k is mix64(key + (k+1)·gamma). Satisfies
/// UniformRandomBitGenerator, but the helpers below are used instead of
/// <random> distributions so results do not depend on the standard library.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Rng(StreamKey key) : key_(key.value()) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  constexpr result_type operator()() {
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ull);
  }

  /// Uniform integer in [lo, hi] by rejection (no modulo bias).
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t span = hi - lo;
    if (span == max()) return (*this)();
    const std::uint64_t range = span + 1;
    // 2^64 mod range; values below it would bias the modulo.
    const std::uint64_t threshold = (0 - range) % range;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x < threshold);
    return lo + x % range;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one output per call).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace mmtsa

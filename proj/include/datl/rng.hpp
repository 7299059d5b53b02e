// Copyright 2026 The datl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace datl {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Derives an independent 64-bit seed for a named sub-stream.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return detail::splitmix64(detail::splitmix64(seed) ^ detail::splitmix64(~stream));
}

/// Stateless counter-based generator: value (key, i) is a pure function, so
/// any shard of a draw sequence can be reproduced without replaying the rest.
/// The stateful wrapper satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t counter = 0) noexcept
      : key_(derive_seed(seed, stream)), counter_(counter) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return at(counter_++); }

  /// The i-th value of this stream, independent of the current position.
  result_type at(std::uint64_t i) const noexcept {
    return detail::splitmix64(key_ + detail::splitmix64(i));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return to_unit(operator()()); }
  double uniform_at(std::uint64_t i) const noexcept { return to_unit(at(i)); }

  /// Uniform integer in [0, n). Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) noexcept {
    if (n <= 1) return 0;
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const unsigned __int128 m = static_cast<unsigned __int128>(operator()()) * n;
      if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
    }
  }

  /// Standard normal via Box-Muller; consumes two values per call.
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  static double to_unit(std::uint64_t v) noexcept {
    return static_cast<double>(v >> 11) * 0x1.0p-53;
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace datl

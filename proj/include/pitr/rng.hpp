#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace pitr {

/// One splitmix64 step; used both as a seed expander and as the documented
/// stream-split: stream_seed(master, i) = splitmix64_mix(master ^ i).
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x00000100000001B3ULL;
  }
  return h;
}

/// Seed for a named sub-stream of a master seed. All randomness in the
/// project funnels through this: component name hashed, index folded in,
/// then mixed. Independent of thread scheduling by construction.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view component,
                                 std::uint64_t index = 0) {
  return splitmix64_mix(master ^ fnv1a64(component) ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
}

/// Deterministic random stream: mt19937_64 (output sequence pinned by the
/// standard) with hand-rolled distributions, so draws are reproducible
/// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64_mix(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Unbiased integer in [0, n); n must be >= 1.
  std::size_t uniform_index(std::size_t n) {
    const std::uint64_t bound = n;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
  }

  /// Standard normal via the Marsaglia polar method (second deviate cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Binomial(k, p) as a sum of Bernoulli draws; O(k), fine at the sizes
  /// used here (k = min(m, n) per bag draw, k = 25 per outcome draw).
  std::uint64_t binomial(std::uint64_t k, double p) {
    std::uint64_t s = 0;
    for (std::uint64_t i = 0; i < k; ++i) s += bernoulli(p) ? 1 : 0;
    return s;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pitr

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string_view>
#include <vector>

#include "hiveguard/errors.hpp"

// Deterministic random numbers and stable hashing. The standard library's
// distributions are implementation-defined, so everything random in this
// project flows through the samplers below; identical seeds give identical
// streams on every platform.

namespace hiveguard {

namespace detail {

inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Combine a seed with stream identifiers to derive independent sub-seeds.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t s = seed ^ (0x9E3779B97F4A7C15ull + (stream << 1));
  detail::splitmix64(s);
  return detail::splitmix64(s);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b) {
  return mix_seed(mix_seed(seed, a), b);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
  return mix_seed(mix_seed(seed, a, b), c);
}

/// 64-bit FNV-1a over raw bytes; the project's stable hash.
inline uint64_t fnv1a64(const void* bytes, size_t n) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  uint64_t h = 0xCBF29CE484222325ull;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

inline uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

/// Map a 64-bit hash onto [0,1) using the top 53 bits.
inline double hash_to_unit(uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Small deterministic generator (splitmix64 core).
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() { return detail::splitmix64(state_); }

  /// Uniform double in [0,1).
  double uniform() { return hash_to_unit(next_u64()); }

  /// Uniform double in [lo,hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0,n). Rejection sampling keeps it unbiased.
  uint64_t uniform_u64(uint64_t n) {
    if (n == 0) throw ConfigError("uniform_u64: n must be positive");
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  /// Standard normal via Box-Muller (two uniforms per draw, no caching).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  /// Exponential with the given rate (inter-arrival gaps of a Poisson process).
  double exponential(double rate) {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -std::log(u) / rate;
  }

  /// Independent child stream.
  Rng fork(uint64_t stream) { return Rng(mix_seed(state_, stream)); }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(uniform_u64(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

}  // namespace hiveguard

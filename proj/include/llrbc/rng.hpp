#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "llrbc/common.hpp"

// Deterministic randomness. mt19937_64 gives a portable bit-exact engine, but the
// standard library's distribution classes do not promise identical output across
// implementations, so the value transforms live here. Every consumer derives its own
// named substream from the run seed; streams never share an engine.

namespace llrbc {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
  return mix64(base + kGolden + fnv1a64(label));
}

template <typename... Ix>
std::uint64_t derive_seed(std::uint64_t base, std::string_view label, Ix... indices) {
  std::uint64_t h = derive_seed(base, label);
  for (std::uint64_t ix : {static_cast<std::uint64_t>(indices)...}) {
    h = mix64(h + kGolden + ix);
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // [0, 1), 53-bit resolution.
  double uniform() { return (engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // {0, ..., n-1}.
  int uniform_int(int n) {
    if (n <= 0) throw config_error("uniform_int needs n > 0");
    int v = static_cast<int>(uniform() * n);
    return v < n ? v : n - 1;
  }

  // Box-Muller, cosine branch only: always consumes exactly two uniforms.
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return mean + stddev * r * std::cos(2.0 * M_PI * u2);
  }

  // rate parameterization: mean 1/rate.
  double exponential(double rate) {
    if (rate <= 0) throw config_error("exponential needs rate > 0");
    return -std::log(1.0 - uniform()) / rate;
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace llrbc

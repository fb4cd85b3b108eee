#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace noisypush {

/// Deterministic 64-bit generator (splitmix64). One instance per logical
/// stream; streams are derived from a seed and a stream id so that runs are
/// reproducible regardless of thread scheduling.
class Rng {
 public:
  Rng() : state_(0x853c49e6748fea9bULL) {}
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Stream `id` of trial `seed`. Different (seed, id) pairs give
  /// statistically independent streams.
  static Rng stream(std::uint64_t seed, std::uint64_t id) {
    return Rng(mix(seed ^ mix(id + 0x9e3779b97f4a7c15ULL)));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound). Lemire's multiply-shift with rejection,
  /// so the result is exactly uniform.
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    while (true) {
      std::uint64_t x = next_u64();
      __uint128_t m = static_cast<__uint128_t>(x) * bound;
      std::uint64_t lo = static_cast<std::uint64_t>(m);
      if (lo >= bound || lo >= static_cast<std::uint64_t>(-static_cast<std::int64_t>(bound)) % bound) {
        return static_cast<std::uint64_t>(m >> 64);
      }
    }
  }

  bool bernoulli(double p) { return next_double() < p; }

  /// Poisson(lambda). Knuth's product method below 30, transformed
  /// rejection (PTRS, Hormann 1993) above; both exact.
  std::int64_t poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    if (lambda < 30.0) {
      const double limit = std::exp(-lambda);
      double prod = 1.0;
      std::int64_t count = -1;
      do {
        prod *= next_double();
        ++count;
      } while (prod > limit);
      return count;
    }
    return poisson_ptrs(lambda);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::int64_t poisson_ptrs(double lambda) {
    const double slam = std::sqrt(lambda);
    const double loglam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    while (true) {
      double u = next_double() - 0.5;
      double v = next_double();
      double us = 0.5 - std::fabs(u);
      double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
      if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
          k * loglam - lambda - std::lgamma(k + 1.0)) {
        return static_cast<std::int64_t>(k);
      }
    }
  }

  std::uint64_t state_;
};

}  // namespace noisypush

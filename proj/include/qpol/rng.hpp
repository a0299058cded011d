#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace qpol {

/// splitmix64 step; used both as a seed mixer and as the hash backbone.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derive an independent stream seed from a master seed and a stream index.
/// Deterministic across platforms, so per-setting substreams reproduce
/// exactly regardless of evaluation order.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

/// FNV-1a 64-bit content hash (used for input provenance fingerprints).
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Deterministic random source. Wraps mt19937_64 but converts to doubles
/// with fixed arithmetic, so uniform/normal/poisson streams are bit-exact
/// across standard libraries (std::*_distribution is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

  std::uint64_t raw() { return gen_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (uses, and discards, a paired variate;
  /// kept stateless for reproducibility of interleaved draws).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  /// Poisson variate. Knuth's product method below mean 30, Hormann's
  /// PTRS transformed rejection above; both consume only uniform() draws.
  long long poisson(double mean) {
    if (!(mean >= 0.0)) return 0;
    if (mean == 0.0) return 0;
    if (mean < 30.0) return poisson_knuth(mean);
    return poisson_ptrs(mean);
  }

 private:
  long long poisson_knuth(double mean) {
    const double limit = std::exp(-mean);
    long long k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }

  long long poisson_ptrs(double mean) {
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      const double u = uniform() - 0.5;
      const double v = uniform();
      const double us = 0.5 - std::abs(u);
      const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<long long>(kf);
      if (kf < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v * invalpha / (a / (us * us) + b)) <=
          kf * loglam - mean - std::lgamma(kf + 1.0))
        return static_cast<long long>(kf);
    }
  }

  std::mt19937_64 gen_;
};

}  // namespace qpol

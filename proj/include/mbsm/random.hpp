#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace mbsm {

// ---- Deterministic sampling ----
//
// std::uniform_real_distribution and friends are not specified bit-for-bit,
// so every stochastic draw in the library goes through this wrapper instead;
// identical seeds then reproduce identical experiments on any platform.

/// splitmix64 mixing step, used to derive independent stream seeds.
[[nodiscard]] inline std::uint64_t split_mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive a stream seed from a master seed and up to three stream labels.
[[nodiscard]] inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                               std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = split_mix(master ^ 0x6a09e667f3bcc909ULL);
  s = split_mix(s ^ a);
  s = split_mix(s ^ b);
  s = split_mix(s ^ c);
  return s;
}

/// Deterministic random engine with fixed sampling algorithms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Raw 64-bit draw.
  [[nodiscard]] std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  [[nodiscard]] double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  [[nodiscard]] double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); n must be positive.
  [[nodiscard]] int uniform_int(int n) {
    const auto wide = static_cast<unsigned __int128>(engine_()) * static_cast<unsigned __int128>(n);
    return static_cast<int>(wide >> 64);
  }

  /// Standard normal draw via Box-Muller; the paired value is cached.
  [[nodiscard]] double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0;
    do {
      u = uniform();
    } while (u <= 0.0);
    const double v = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u));
    const double angle = 2.0 * M_PI * v;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Poisson draw by Knuth's product method (intended for small means).
  [[nodiscard]] int poisson(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    int count = 0;
    double product = uniform();
    while (product > limit) {
      ++count;
      product *= uniform();
    }
    return count;
  }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (int i = static_cast<int>(values.size()) - 1; i > 0; --i) {
      std::swap(values[static_cast<std::size_t>(i)],
                values[static_cast<std::size_t>(uniform_int(i + 1))]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mbsm

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace hol {

/// Seeded random source for the simulators.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The samplers below are written out instead of using the
/// std:: distributions, whose algorithms vary between standard libraries,
/// so a seed reproduces the same run on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n), n > 0. Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 product = static_cast<unsigned __int128>(engine_()) * n;
    auto low = static_cast<std::uint64_t>(product);
    if (low < n) {
      const std::uint64_t threshold = -n % n;
      while (low < threshold) {
        product = static_cast<unsigned __int128>(engine_()) * n;
        low = static_cast<std::uint64_t>(product);
      }
    }
    return static_cast<std::uint64_t>(product >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Poisson sampler by sequential inversion; intended for the small per-slot
/// rates of an intersection (λ well below 30).
class PoissonSampler {
 public:
  explicit PoissonSampler(double mean) : mean_(mean), p0_(std::exp(-mean)) {}

  std::uint32_t operator()(Rng& rng) const {
    if (mean_ <= 0.0) return 0;
    double u = rng.uniform();
    double p = p0_;
    std::uint32_t k = 0;
    // Guard k against the cdf never reaching u due to rounding in the tail.
    while (u >= p && k < 1000) {
      u -= p;
      ++k;
      p *= mean_ / static_cast<double>(k);
    }
    return k;
  }

  double mean() const { return mean_; }

 private:
  double mean_;
  double p0_;
};

}  // namespace hol

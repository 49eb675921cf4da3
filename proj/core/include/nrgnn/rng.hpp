#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace nrgnn {

// Seeded random stream with hand-rolled distributions. std::mt19937_64 output
// is pinned by the standard, but the std distributions are not; rolling our
// own keeps results bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed), seed_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of mantissa.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, n). n must be positive.
  int64_t index(int64_t n) {
    return static_cast<int64_t>(engine_() % static_cast<uint64_t>(n));
  }

  // Standard normal via Box-Muller; one value per pair of uniforms.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Gamma(shape, 1) via Marsaglia-Tsang; used by the Beta sampler.
  double gamma(double shape);

  // Beta(a, b) as Gamma(a)/(Gamma(a)+Gamma(b)).
  double beta(double a, double b);

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
      std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(index(i + 1))]);
    }
  }

  // Independent child stream; tag decorrelates streams derived from one seed.
  Rng fork(std::string_view tag) const;

  uint64_t seed_of() const { return seed_; }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  std::mt19937_64 engine_;
  uint64_t seed_ = 0;
};

// FNV-1a, used for rng stream tags and data-file fingerprints.
uint64_t fnv1a(std::string_view s, uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace nrgnn

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "nrgnn/noise.hpp"

using namespace nrgnn;

namespace {

std::vector<int32_t> iota_mask(int32_t n) {
  std::vector<int32_t> m(static_cast<size_t>(n));
  for (int32_t i = 0; i < n; ++i) m[static_cast<size_t>(i)] = i;
  return m;
}

}  // namespace

TEST_CASE("zero rate leaves labels unchanged") {
  const std::vector<int32_t> labels = {0, 1, 2, 3, 2, 1};
  NoiseSpec spec;
  spec.rate = 0.0;
  spec.seed = 1;
  CHECK(corrupt(labels, iota_mask(6), spec, 4) == labels);
}

TEST_CASE("pair noise at rate 1 maps every masked label through pair_map") {
  const std::vector<int32_t> labels = {0, 1, 2, 3, 0, 2};
  NoiseSpec spec;
  spec.kind = NoiseKind::Pair;
  spec.rate = 1.0;
  spec.seed = 3;
  const auto noisy = corrupt(labels, iota_mask(6), spec, 4);
  for (size_t i = 0; i < labels.size(); ++i) {
    CHECK(noisy[i] == (labels[i] + 1) % 4);  // default cyclic pair map
  }
}

TEST_CASE("unmasked labels pass through untouched") {
  const std::vector<int32_t> labels = {0, 1, 2, 3};
  NoiseSpec spec;
  spec.rate = 1.0;
  spec.seed = 5;
  const std::vector<int32_t> mask = {1, 3};
  const auto noisy = corrupt(labels, mask, spec, 4);
  CHECK(noisy[0] == 0);
  CHECK(noisy[2] == 2);
  CHECK(noisy[1] != 1);
  CHECK(noisy[3] != 3);
}

TEST_CASE("pair map with a fixed point is rejected when rate > 0") {
  NoiseSpec spec;
  spec.kind = NoiseKind::Pair;
  spec.rate = 0.5;
  spec.pair_map = {0, 2, 1};  // class 0 maps to itself
  spec.seed = 1;
  CHECK_THROWS_AS(corrupt({0, 1, 2}, iota_mask(3), spec, 3), std::invalid_argument);
}

TEST_CASE("uniform flips match the binomial and chi-square oracles") {
  // 10,000 labels of class 0, rate 0.2, C = 5: flip count ~ Binomial(10000, 0.2)
  // and flipped targets ~ uniform over classes 1..4.
  const int32_t n = 10000;
  const int64_t c = 5;
  const std::vector<int32_t> labels(static_cast<size_t>(n), 0);
  NoiseSpec spec;
  spec.rate = 0.2;
  spec.seed = 1234;
  const auto noisy = corrupt(labels, iota_mask(n), spec, c);

  int64_t flips = 0;
  std::vector<int64_t> bins(static_cast<size_t>(c), 0);
  for (const int32_t y : noisy) {
    if (y != 0) {
      ++flips;
      bins[static_cast<size_t>(y)] += 1;
    }
  }
  const double mu = 10000.0 * 0.2;
  const double sd = std::sqrt(10000.0 * 0.2 * 0.8);
  CHECK(std::abs(static_cast<double>(flips) - mu) <= 3.0 * sd);

  // Chi-square over the 4 target bins, df = 3, alpha = 0.01 -> 11.345.
  const double expected = static_cast<double>(flips) / 4.0;
  double chi2 = 0.0;
  for (int64_t k = 1; k < c; ++k) {
    const double d = static_cast<double>(bins[static_cast<size_t>(k)]) - expected;
    chi2 += d * d / expected;
  }
  CHECK(chi2 <= 11.345);
}

TEST_CASE("same spec gives identical output across invocations") {
  std::vector<int32_t> labels(500);
  for (size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int32_t>(i % 6);
  NoiseSpec spec;
  spec.rate = 0.3;
  spec.seed = 77;
  const auto a = corrupt(labels, iota_mask(500), spec, 6);
  const auto b = corrupt(labels, iota_mask(500), spec, 6);
  CHECK(a == b);
}

TEST_CASE("draws bind to node ids, not mask order") {
  std::vector<int32_t> labels = {0, 1, 2, 3, 0, 1};
  NoiseSpec spec;
  spec.rate = 0.5;
  spec.seed = 9;
  const std::vector<int32_t> fwd = {0, 2, 4};
  const std::vector<int32_t> rev = {4, 2, 0};
  CHECK(corrupt(labels, fwd, spec, 4) == corrupt(labels, rev, spec, 4));
}

TEST_CASE("apply_noise corrupts train and val and blanks the rest") {
  LabelSplit split;
  split.true_labels = {0, 1, 2, 0, 1, 2, 0, 1};
  split.train = {0, 1};
  split.val = {2, 3};
  split.test = {4, 5};
  NoiseSpec spec;
  spec.rate = 1.0;
  spec.seed = 2;
  const LabelSplit noisy = apply_noise(split, spec, 3);
  for (const int32_t v : {0, 1, 2, 3}) {
    CHECK(noisy.noisy_labels[static_cast<size_t>(v)] >= 0);
    CHECK(noisy.noisy_labels[static_cast<size_t>(v)] !=
          split.true_labels[static_cast<size_t>(v)]);  // rate 1 always flips
  }
  for (const int32_t v : {4, 5, 6, 7}) {
    CHECK(noisy.noisy_labels[static_cast<size_t>(v)] == -1);
  }
}

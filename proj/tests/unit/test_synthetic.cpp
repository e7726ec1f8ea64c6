#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ladle/error.hpp"
#include "ladle/random.hpp"
#include "ladle/synthetic.hpp"

using namespace ladle;

namespace {

SyntheticSpec spec3() {
  SyntheticSpec s;
  s.features = {{"a", -1, 1}, {"r", 10, 40}};
  s.models = {{{1.0, 0.0}, 0.5}, {{-1.0, 0.0}, 0.0}, {{2.0, 0.01}, -1.0}};
  s.region_feature = 1;
  s.noise_sigma = 0.1;
  s.n_samples = 30000;
  s.seed = 21;
  s.samples_per_timestamp = 4;
  return s;
}

}  // namespace

TEST(Synthetic, LabelsFollowSlabsAndResidualsAreTheNoise) {
  const auto spec = spec3();
  const auto data = generate_synthetic(spec);
  ASSERT_EQ(data.dataset.size(), spec.n_samples);
  double sum = 0.0, sumsq = 0.0;
  std::vector<std::size_t> per_label(3, 0);
  for (std::size_t i = 0; i < data.dataset.size(); ++i) {
    const auto& s = data.dataset.samples[i];
    EXPECT_GE(s.features[0], -1.0);
    EXPECT_LT(s.features[0], 1.0);
    const std::size_t slab = s.features[1] < 20 ? 0 : (s.features[1] < 30 ? 1 : 2);
    ASSERT_EQ(data.labels[i], slab);
    ++per_label[slab];
    const auto& m = spec.models[slab];
    const double r = s.target - (m.intercept + m.weights[0] * s.features[0] + m.weights[1] * s.features[1]);
    sum += r;
    sumsq += r * r;
    EXPECT_EQ(s.timestamp, static_cast<std::int64_t>(i / 4));
  }
  const double n = static_cast<double>(spec.n_samples);
  EXPECT_NEAR(sum / n, 0.0, 5 * spec.noise_sigma / std::sqrt(n));
  EXPECT_NEAR(std::sqrt(sumsq / n), spec.noise_sigma, 0.02 * spec.noise_sigma);
  for (auto c : per_label) EXPECT_NEAR(static_cast<double>(c) / n, 1.0 / 3.0, 0.015);
}

TEST(Synthetic, SameSeedSameData) {
  const auto a = generate_synthetic(spec3());
  const auto b = generate_synthetic(spec3());
  for (std::size_t i = 0; i < a.dataset.size(); i += 97) {
    EXPECT_EQ(a.dataset.samples[i].features, b.dataset.samples[i].features);
    EXPECT_EQ(a.dataset.samples[i].target, b.dataset.samples[i].target);
  }
  auto other = spec3();
  other.seed = 22;
  EXPECT_NE(generate_synthetic(other).dataset.samples[0].features, a.dataset.samples[0].features);
}

TEST(Synthetic, NoiseLevelDoesNotChangeFeatures) {
  auto quiet = spec3();
  quiet.noise_sigma = 0.0;
  const auto a = generate_synthetic(quiet);
  const auto b = generate_synthetic(spec3());
  for (std::size_t i = 0; i < 1000; ++i) EXPECT_EQ(a.dataset.samples[i].features, b.dataset.samples[i].features);
}

TEST(Synthetic, RejectsBadSpecs) {
  auto s = spec3();
  s.region_feature = 5;
  EXPECT_THROW(generate_synthetic(s), Error);
  s = spec3();
  s.models[1].weights.pop_back();
  EXPECT_THROW(generate_synthetic(s), Error);
  s = spec3();
  s.noise_sigma = -1;
  EXPECT_THROW(generate_synthetic(s), Error);
  s = spec3();
  s.samples_per_timestamp = 0;
  EXPECT_THROW(generate_synthetic(s), Error);
}

TEST(Rng, UniformAndIndexAreUnbiased) {
  Rng rng(1);
  std::vector<std::size_t> counts(7, 0);
  const int draws = 70000;
  double mean = 0.0;
  for (int i = 0; i < draws; ++i) {
    ++counts[rng.index(7)];
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    mean += u;
  }
  double chi2 = 0.0;
  for (auto c : counts) chi2 += std::pow(static_cast<double>(c) - draws / 7.0, 2) / (draws / 7.0);
  EXPECT_LT(chi2, 22.46);  // 6 dof, p = 0.001
  EXPECT_NEAR(mean / draws, 0.5, 0.005);
}

TEST(Rng, NormalMoments) {
  Rng rng(2);
  double s = 0, s2 = 0, s4 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.015);
  EXPECT_NEAR(s4 / n, 3.0, 0.1);
}

TEST(Rng, ShuffleIsAPermutationAndReproducible) {
  std::vector<int> a(100), b(100);
  std::iota(a.begin(), a.end(), 0);
  b = a;
  Rng r1(5), r2(5);
  r1.shuffle(std::span<int>(a));
  r2.shuffle(std::span<int>(b));
  EXPECT_EQ(a, b);
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Rng, FirstOutputsPinned) {
  // mt19937_64 with the default seeding is fixed by the standard; the
  // 10000th output for seed 5489 is 9981545732273789042.
  Rng rng(5489);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next();
  EXPECT_EQ(v, 9981545732273789042ULL);
}

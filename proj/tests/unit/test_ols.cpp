#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "ladle/error.hpp"
#include "ladle/ols.hpp"
#include "ladle/random.hpp"
#include "oracles.hpp"

using namespace ladle;

namespace {

struct Problem {
  oracle::Matrix x;
  std::vector<double> y;
  DesignMatrix design;
};

Problem random_problem(std::uint64_t seed, std::size_t n, std::size_t p, double noise) {
  Rng rng(seed);
  std::vector<double> w(p);
  for (auto& v : w) v = rng.uniform(-2.0, 2.0);
  Problem out{oracle::Matrix(n, std::vector<double>(p)), std::vector<double>(n), DesignMatrix(n, p)};
  for (std::size_t i = 0; i < n; ++i) {
    double t = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      out.x[i][j] = rng.uniform(-1.0, 3.0);
      out.design.at(i, j) = out.x[i][j];
      t += w[j] * out.x[i][j];
    }
    out.y[i] = t + noise * rng.normal();
    out.design.target(i) = out.y[i];
  }
  return out;
}

}  // namespace

TEST(LeastSquares, MatchesNormalEquationsOnRandomProblems) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const std::size_t p = 1 + seed % 5;
    auto prob = random_problem(seed, 40 + seed, p, 0.3);
    const auto fit = fit_least_squares(prob.design, LeastSquaresOptions{});
    const auto expected = oracle::normal_equations(prob.x, prob.y);
    ASSERT_EQ(fit.weights.size(), p);
    for (std::size_t j = 0; j < p; ++j) EXPECT_NEAR(fit.weights[j], expected[j], 1e-9) << "seed " << seed;
    EXPECT_NEAR(fit.sse, oracle::sse(prob.x, prob.y, expected), 1e-9 * (1.0 + fit.sse));
    EXPECT_EQ(fit.member_count, prob.y.size());
  }
}

TEST(LeastSquares, InterceptEqualsAppendedOnesColumn) {
  auto prob = random_problem(3, 60, 3, 0.5);
  for (auto& v : prob.y) v += 4.0;
  for (std::size_t i = 0; i < prob.y.size(); ++i) prob.design.target(i) = prob.y[i];
  auto xa = prob.x;
  for (auto& row : xa) row.push_back(1.0);
  const auto expected = oracle::normal_equations(xa, prob.y);
  const auto fit = fit_least_squares(prob.design, LeastSquaresOptions{.use_intercept = true, .bounds = {}});
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(fit.weights[j], expected[j], 1e-9);
  EXPECT_NEAR(fit.intercept, expected[3], 1e-9);
}

TEST(LeastSquares, RowSubsetUsesOnlyThoseRows) {
  auto prob = random_problem(9, 50, 2, 0.2);
  std::vector<std::size_t> rows;
  oracle::Matrix xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < 50; i += 3) {
    rows.push_back(i);
    xs.push_back(prob.x[i]);
    ys.push_back(prob.y[i]);
  }
  const auto fit = fit_least_squares(prob.design, rows, LeastSquaresOptions{});
  const auto expected = oracle::normal_equations(xs, ys);
  EXPECT_NEAR(fit.weights[0], expected[0], 1e-10);
  EXPECT_NEAR(fit.weights[1], expected[1], 1e-10);
  EXPECT_EQ(fit.member_count, rows.size());
}

TEST(LeastSquares, ExactDataRecoveredExactly) {
  DesignMatrix d(4, 2);
  const double xs[4][2] = {{1, 0}, {0, 1}, {1, 1}, {2, 1}};
  for (std::size_t i = 0; i < 4; ++i) {
    d.at(i, 0) = xs[i][0];
    d.at(i, 1) = xs[i][1];
    d.target(i) = 3.0 * xs[i][0] - 0.5 * xs[i][1];
  }
  const auto fit = fit_least_squares(d, LeastSquaresOptions{});
  EXPECT_NEAR(fit.weights[0], 3.0, 1e-12);
  EXPECT_NEAR(fit.weights[1], -0.5, 1e-12);
  EXPECT_NEAR(fit.sse, 0.0, 1e-20);
}

TEST(LeastSquares, TooFewRowsIsDegenerate) {
  auto prob = random_problem(1, 2, 3, 0.0);
  try {
    fit_least_squares(prob.design, LeastSquaresOptions{});
    FAIL() << "expected DegenerateFit";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateFit);
  }
}

TEST(LeastSquares, RankDeficientDesignStaysFiniteAndFitsTheData) {
  // Second column duplicates the first: any split of the weight sum fits.
  DesignMatrix d(20, 2);
  for (std::size_t i = 0; i < 20; ++i) {
    d.at(i, 0) = d.at(i, 1) = static_cast<double>(i) / 10.0;
    d.target(i) = 2.0 * d.at(i, 0);
  }
  const auto fit = fit_least_squares(d, LeastSquaresOptions{});
  ASSERT_TRUE(std::isfinite(fit.weights[0]) && std::isfinite(fit.weights[1]));
  EXPECT_NEAR(fit.weights[0] + fit.weights[1], 2.0, 1e-6);
  EXPECT_LT(fit.sse, 1e-10);
}

TEST(LeastSquares, BoxBoundsMatchActiveSetEnumeration) {
  const double inf = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const std::size_t p = 2 + seed % 2;
    auto prob = random_problem(100 + seed, 50, p, 0.4);
    Rng rng(seed);
    std::vector<double> lo(p), hi(p);
    std::vector<WeightBound> bounds(p);
    for (std::size_t j = 0; j < p; ++j) {
      const double anchor = rng.uniform(-1.5, 0.5);
      lo[j] = rng.uniform() < 0.3 ? -inf : anchor;
      hi[j] = rng.uniform() < 0.3 ? inf : anchor + rng.uniform(0.1, 1.5);
      bounds[j] = {lo[j], hi[j]};
    }
    const auto expected = oracle::bounded_least_squares(prob.x, prob.y, lo, hi);
    const auto fit = fit_least_squares(prob.design, LeastSquaresOptions{.use_intercept = false, .bounds = bounds});
    for (std::size_t j = 0; j < p; ++j) {
      EXPECT_GE(fit.weights[j], lo[j]);
      EXPECT_LE(fit.weights[j], hi[j]);
      EXPECT_NEAR(fit.weights[j], expected[j], 1e-6) << "seed " << seed << " j " << j;
    }
    EXPECT_LE(fit.sse, oracle::sse(prob.x, prob.y, expected) * (1.0 + 1e-9) + 1e-12);
  }
}

TEST(LeastSquares, BoundsOfWrongLengthRejected) {
  auto prob = random_problem(2, 10, 2, 0.1);
  EXPECT_THROW(fit_least_squares(prob.design, LeastSquaresOptions{.use_intercept = false, .bounds = {WeightBound{}}}),
               Error);
}

TEST(LeastSquares, ScaledDesignGivesSamePredictions) {
  Dataset ds;
  Rng rng(5);
  for (int i = 0; i < 80; ++i) {
    MeltSample s;
    s.features = {rng.uniform(100.0, 200.0), rng.uniform(0.001, 0.002)};
    s.target = 0.01 * s.features[0] + 300.0 * s.features[1] + 0.01 * rng.normal();
    ds.samples.push_back(s);
  }
  const std::vector<std::size_t> idx{0, 1};
  FeatureScaling scaling{{150.0, 0.0015}, {30.0, 0.0003}};
  const auto raw = fit_least_squares(DesignMatrix::from_samples(ds.samples, idx), {.use_intercept = true, .bounds = {}});
  const auto scaled =
      fit_least_squares(DesignMatrix::from_samples(ds.samples, idx, scaling), {.use_intercept = true, .bounds = {}});
  for (const auto& s : ds.samples) {
    const std::vector<double> xs{scaling.apply(0, s.features[0]), scaling.apply(1, s.features[1])};
    EXPECT_NEAR(predict_linear(raw, s.features), predict_linear(scaled, xs), 1e-9);
  }
}

TEST(LeastSquares, SampleErrorIsSquaredResidualOnTheView) {
  ClusterModel m{{2.0, -1.0}, 0.5, 0, 0.0};
  MeltSample s{"a", 0, {9.0, 1.0, 3.0}, 1.0};
  // View picks features 2 and 1: 2*3 - 1*1 + 0.5 = 5.5, residual 4.5.
  EXPECT_DOUBLE_EQ(sample_error(m, s, std::vector<std::size_t>{2, 1}), 4.5 * 4.5);
  EXPECT_THROW(sample_error(m, s, std::vector<std::size_t>{0}), Error);
}

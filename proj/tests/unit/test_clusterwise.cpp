#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ladle/clusterwise.hpp"
#include "ladle/error.hpp"
#include "ladle/random.hpp"
#include "ladle/synthetic.hpp"
#include "oracles.hpp"

using namespace ladle;

namespace {

SyntheticSpec planted_spec(std::size_t n, std::uint64_t seed, double sigma = 0.002) {
  SyntheticSpec s;
  s.element = "Mn";
  s.features = {{"Mn", 0.2, 0.8}, {"Mn_added", 0.1, 0.8}, {"Si", 0.1, 0.4}, {"scrap", 0, 1}, {"oxidation", 0, 1}};
  s.models = {{{1.0, 0.95, 0, -0.1, 0}, 0}, {{0.8, 0.7, 0, 0, 0}, 0}, {{0.6, 0.45, 0.1, 0.1, 0}, 0}};
  s.region_feature = 4;
  s.noise_sigma = sigma;
  s.n_samples = n;
  s.seed = seed;
  return s;
}

Hyperparams planted_hp(std::uint64_t seed) {
  auto hp = default_hyperparams({0, 1, 2, 3}, {4}, 3);
  hp.seed = seed;
  return hp;
}

// Random clusterwise data for property tests: a random number of planted
// planes over random ranges, random k.
struct RandomCase {
  Dataset ds;
  Hyperparams hp;
};

RandomCase random_case(std::uint64_t seed) {
  Rng rng(seed);
  SyntheticSpec s;
  const std::size_t dims = 2 + rng.index(3);
  for (std::size_t j = 0; j < dims; ++j) {
    const double lo = rng.uniform(-1.0, 1.0);
    s.features.push_back({"f" + std::to_string(j), lo, lo + rng.uniform(0.5, 2.0)});
  }
  const std::size_t planes = 1 + rng.index(4);
  for (std::size_t m = 0; m < planes; ++m) {
    std::vector<double> w(dims);
    for (auto& v : w) v = rng.uniform(-2.0, 2.0);
    s.models.push_back({w, rng.uniform(-1.0, 1.0)});
  }
  s.region_feature = rng.index(dims);
  s.noise_sigma = rng.uniform(0.0, 0.3);
  s.n_samples = 400 + rng.index(800);
  s.seed = seed;
  RandomCase out{generate_synthetic(s).dataset, {}};
  std::vector<std::size_t> lr(dims);
  std::iota(lr.begin(), lr.end(), std::size_t{0});
  out.hp = default_hyperparams(lr, lr, 2 + rng.index(5));
  out.hp.use_intercept = rng.uniform() < 0.5;
  out.hp.min_cluster_size = 10 + rng.index(40);
  out.hp.convergence_threshold = rng.index(5);
  out.hp.seed = seed;
  return out;
}

// Plain re-statement of the iteration: per-cluster normal equations, every
// sample to its lowest-error cluster (lowest index on ties), clusters below
// the minimum size dropped with their samples sent to the best survivor.
struct Reference {
  std::vector<std::vector<double>> weights;  // with intercept appended when used
  std::vector<std::size_t> assign;
};

Reference reference_fit(const Dataset& ds, Hyperparams hp) {
  hp = hp.resolved(ds.size());
  const std::size_t n = ds.size();
  const std::size_t none = SIZE_MAX;
  auto row = [&](std::size_t i) {
    std::vector<double> x;
    for (auto f : hp.lr_feature_idx) x.push_back(ds.samples[i].features[f]);
    if (hp.use_intercept) x.push_back(1.0);
    return x;
  };
  auto err = [&](const std::vector<double>& w, std::size_t i) {
    const auto x = row(i);
    double r = -ds.samples[i].target;
    for (std::size_t j = 0; j < w.size(); ++j) r += w[j] * x[j];
    return r * r;
  };
  std::vector<std::size_t> assign(n, none);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(hp.seed);
  rng.shuffle(std::span<std::size_t>(order));
  for (std::size_t c = 0; c < hp.n_clusters; ++c)
    for (std::size_t t = 0; t < hp.init_per_cluster; ++t) assign[order[c * hp.init_per_cluster + t]] = c;

  std::vector<std::size_t> live(hp.n_clusters);
  std::iota(live.begin(), live.end(), std::size_t{0});
  std::vector<std::vector<double>> w(hp.n_clusters);
  auto refit = [&] {
    for (auto c : live) {
      oracle::Matrix x;
      std::vector<double> y;
      for (std::size_t i = 0; i < n; ++i) {
        if (assign[i] == c) {
          x.push_back(row(i));
          y.push_back(ds.samples[i].target);
        }
      }
      w[c] = oracle::normal_equations(x, y);
    }
  };
  for (std::size_t iter = 0; iter < hp.max_iters; ++iter) {
    refit();
    std::vector<std::size_t> best(n);
    std::map<std::size_t, std::size_t> counts;
    for (std::size_t i = 0; i < n; ++i) {
      best[i] = live[0];
      for (auto c : live) {
        if (err(w[c], i) < err(w[best[i]], i)) best[i] = c;
      }
      ++counts[best[i]];
    }
    std::vector<std::size_t> kept;
    for (auto c : live) {
      if (counts[c] >= hp.min_cluster_size) kept.push_back(c);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (counts[best[i]] >= hp.min_cluster_size) continue;
      best[i] = kept[0];
      for (auto c : kept) {
        if (err(w[c], i) < err(w[best[i]], i)) best[i] = c;
      }
    }
    std::size_t moved = 0;
    for (std::size_t i = 0; i < n; ++i) moved += best[i] != assign[i];
    assign = best;
    live = kept;
    if (moved < hp.convergence_threshold) break;
  }
  refit();
  Reference out;
  std::map<std::size_t, std::size_t> dense;
  for (auto c : live) {
    dense[c] = out.weights.size();
    out.weights.push_back(w[c]);
  }
  for (auto a : assign) out.assign.push_back(dense.at(a));
  return out;
}

}  // namespace

TEST(Clusterwise, MatchesReferenceIteration) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    auto rc = random_case(seed);
    rc.hp.max_iters = 15;
    ClusterwiseRegressor model;
    try {
      model = fit_clusterwise(rc.ds, rc.hp);
    } catch (const Error& e) {
      ASSERT_TRUE(e.code() == ErrorCode::AllClustersPruned || e.code() == ErrorCode::InsufficientData)
          << e.what();
      continue;
    }
    const auto ref = reference_fit(rc.ds, rc.hp);
    ASSERT_EQ(model.clusters.size(), ref.weights.size()) << "seed " << seed;
    EXPECT_EQ(model.assignments, ref.assign) << "seed " << seed;
    for (std::size_t c = 0; c < ref.weights.size(); ++c) {
      const auto& m = model.clusters[c];
      for (std::size_t j = 0; j < m.weights.size(); ++j) EXPECT_NEAR(m.weights[j], ref.weights[c][j], 1e-7);
      if (rc.hp.use_intercept) EXPECT_NEAR(m.intercept, ref.weights[c].back(), 1e-7);
    }
  }
}

TEST(Clusterwise, TotalSseNeverIncreasesWithoutPruning) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto rc = random_case(1000 + seed);
    ClusterwiseRegressor model;
    try {
      model = fit_clusterwise(rc.ds, rc.hp);
    } catch (const Error&) {
      continue;
    }
    const auto& h = model.summary.history;
    for (std::size_t t = 1; t < h.size(); ++t) {
      const double slack = 1e-10 * (1.0 + h[t - 1].sse_after_assign);
      // Refit on unchanged assignments cannot raise the error...
      EXPECT_LE(h[t].sse_after_fit, h[t - 1].sse_after_assign + slack) << "seed " << seed << " iter " << t;
      // ...and neither can moving every sample to its best cluster.
      if (h[t].pruned == 0) {
        EXPECT_LE(h[t].sse_after_assign, h[t].sse_after_fit + slack) << "seed " << seed << " iter " << t;
      }
    }
  }
}

TEST(Clusterwise, FinalSseMatchesIndependentRecount) {
  auto rc = random_case(77);
  const auto model = fit_clusterwise(rc.ds, rc.hp);
  double sse = 0.0;
  for (std::size_t i = 0; i < rc.ds.size(); ++i) {
    const auto& m = model.clusters[model.assignments[i]];
    double r = m.intercept - rc.ds.samples[i].target;
    for (std::size_t j = 0; j < m.weights.size(); ++j)
      r += m.weights[j] * rc.ds.samples[i].features[rc.hp.lr_feature_idx[j]];
    sse += r * r;
  }
  EXPECT_NEAR(model.summary.final_sse, sse, 1e-9 * (1.0 + sse));
  EXPECT_NEAR(total_sse(model, rc.ds), sse, 1e-9 * (1.0 + sse));
}

TEST(Clusterwise, EveryClusterMeetsMinimumSize) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto rc = random_case(500 + seed);
    ClusterwiseRegressor model;
    try {
      model = fit_clusterwise(rc.ds, rc.hp);
    } catch (const Error&) {
      continue;
    }
    std::vector<std::size_t> counts(model.clusters.size(), 0);
    for (auto a : model.assignments) ++counts.at(a);
    const auto& last = model.summary.history.back();
    EXPECT_EQ(last.clusters, model.clusters.size());
    for (std::size_t c = 0; c < counts.size(); ++c) {
      EXPECT_EQ(counts[c], model.clusters[c].member_count);
      EXPECT_GE(counts[c], rc.hp.min_cluster_size) << "seed " << seed;
    }
  }
}

TEST(Clusterwise, SameSeedSameModelAndThreadsDoNotMatter) {
  const auto data = generate_synthetic(planted_spec(3000, 4));
  const auto a = fit_clusterwise(data.dataset, planted_hp(8));
  const auto b = fit_clusterwise(data.dataset, planted_hp(8));
  const auto c = fit_clusterwise(data.dataset, planted_hp(8), {.threads = 4});
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_EQ(a.assignments, c.assignments);
  for (std::size_t k = 0; k < a.clusters.size(); ++k) {
    EXPECT_EQ(a.clusters[k].weights, c.clusters[k].weights);  // bitwise
    EXPECT_EQ(a.clusters[k].sse, c.clusters[k].sse);
  }
  EXPECT_EQ(a.summary.final_sse, c.summary.final_sse);
}

TEST(Clusterwise, PlantedPlanesRecovered) {
  const auto data = generate_synthetic(planted_spec(6000, 2));
  const auto model = fit_model(data.dataset, planted_hp(3));
  ASSERT_EQ(model.clusters.size(), 3u);
  const auto spec = planted_spec(6000, 2);
  for (const auto& pm : spec.models) {
    double best = 1e9;
    for (const auto& c : model.clusters) {
      double d = 0.0;
      for (std::size_t j = 0; j < 4; ++j) d = std::max(d, std::abs(c.weights[j] - pm.weights[j]));
      best = std::min(best, d);
    }
    EXPECT_LT(best, 0.01);
  }
}

TEST(Clusterwise, OversizedMinimumPrunesToOneCluster) {
  const auto data = generate_synthetic(planted_spec(900, 1));
  auto hp = planted_hp(1);
  hp.n_clusters = 3;
  hp.init_per_cluster = 100;
  hp.min_cluster_size = 300;  // only a cluster holding a third of the data survives
  const auto model = fit_clusterwise(data.dataset, hp);
  EXPECT_LE(model.clusters.size(), 3u);
  EXPECT_EQ(model.summary.clusters_pruned + model.clusters.size(), 3u);
  for (auto a : model.assignments) EXPECT_LT(a, model.clusters.size());
}

TEST(Clusterwise, SomeClusterAlwaysSurvivesAValidatedMinimum) {
  // Validation demands n >= k * K, so by pigeonhole one cluster keeps >= K.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto data = generate_synthetic(planted_spec(300, seed));
    auto hp = planted_hp(seed);
    hp.init_per_cluster = 10;
    hp.min_cluster_size = 100;
    const auto model = fit_clusterwise(data.dataset, hp);
    EXPECT_GE(model.clusters.size(), 1u);
  }
}

TEST(Clusterwise, ValidationErrors) {
  const auto data = generate_synthetic(planted_spec(200, 1));
  auto expect_code = [&](Hyperparams hp, ErrorCode code) {
    try {
      fit_clusterwise(data.dataset, hp);
      ADD_FAILURE() << "expected " << to_string(code);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), code) << e.what();
    }
  };
  auto hp = planted_hp(0);
  hp.n_clusters = 10;
  expect_code(hp, ErrorCode::InsufficientData);  // 10 * 50 > 200
  hp = planted_hp(0);
  hp.lr_feature_idx = {0, 9};
  expect_code(hp, ErrorCode::InvalidArgument);
  hp = planted_hp(0);
  hp.lr_feature_idx = {0, 0};
  expect_code(hp, ErrorCode::InvalidArgument);
  hp = planted_hp(0);
  hp.min_cluster_size = 4;  // not above the 4 regression parameters
  expect_code(hp, ErrorCode::InvalidArgument);
  hp = planted_hp(0);
  hp.weight_bounds = {{1.0, 0.0}, {}, {}, {}};
  expect_code(hp, ErrorCode::InvalidArgument);
  hp = planted_hp(0);
  hp.n_clusters = 0;
  expect_code(hp, ErrorCode::InvalidArgument);
}

TEST(Clusterwise, InitSizeDefaultsToHalfPerCluster) {
  Hyperparams hp;
  hp.n_clusters = 4;
  EXPECT_EQ(hp.resolved(1000).init_per_cluster, 125u);
  hp.init_per_cluster = 7;
  EXPECT_EQ(hp.resolved(1000).init_per_cluster, 7u);
  EXPECT_EQ(default_hyperparams({0, 1}, {}).min_cluster_size, 50u);
  EXPECT_EQ(default_hyperparams(std::vector<std::size_t>(40, 0), {}).min_cluster_size, 80u);
}

TEST(Clusterwise, WeightBoundsHoldInRawUnits) {
  const auto data = generate_synthetic(planted_spec(3000, 5));
  for (bool normalize : {false, true}) {
    auto hp = planted_hp(5);
    hp.normalize = normalize;
    hp.weight_bounds = {{0.0, 0.9}, {0.5, 0.9}, {-0.05, 0.05}, {}};
    const auto model = fit_clusterwise(data.dataset, hp);
    for (std::size_t c = 0; c < model.clusters.size(); ++c) {
      const auto raw = model.raw_coefficients(c);
      for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_GE(raw.weights[j], hp.weight_bounds[j].lower - 1e-9);
        EXPECT_LE(raw.weights[j], hp.weight_bounds[j].upper + 1e-9);
      }
    }
  }
}

TEST(Clusterwise, NormalizedModelPredictsInRawUnits) {
  const auto data = generate_synthetic(planted_spec(3000, 6));
  for (bool intercept : {false, true}) {
    auto hp = planted_hp(6);
    hp.normalize = true;
    hp.use_intercept = intercept;
    const auto model = fit_model(data.dataset, hp);
    for (std::size_t i = 0; i < 50; ++i) {
      const auto& s = data.dataset.samples[i];
      const auto c = model.assignments[i];
      const auto raw = model.raw_coefficients(c);
      double expected = raw.intercept;
      for (std::size_t j = 0; j < 4; ++j) expected += raw.weights[j] * s.features[j];
      EXPECT_NEAR(model.predict_in_cluster(c, s.features), expected, 1e-12);
    }
    const auto plain = fit_model(data.dataset, planted_hp(6));
    EXPECT_EQ(plain.clusters.size(), model.clusters.size());
  }
}

TEST(Clusterwise, PredictRoutesThroughClassifier) {
  const auto data = generate_synthetic(planted_spec(3000, 9));
  const auto model = fit_model(data.dataset, planted_hp(9));
  ASSERT_TRUE(model.fitted());
  for (std::size_t i = 0; i < 100; ++i) {
    const auto& s = data.dataset.samples[i];
    const auto c = assign_cluster(model, s);
    EXPECT_EQ(predict(model, s), model.predict_in_cluster(c, s.features));
    EXPECT_NEAR(predict(model, s), s.target, 0.02);
  }
  ClusterwiseRegressor empty;
  EXPECT_THROW(predict(empty, data.dataset.samples[0]), Error);
}

TEST(Clusterwise, AugmentedVariantAlsoSeparatesPlantedSlabs) {
  const auto data = generate_synthetic(planted_spec(3000, 10));
  const auto model = fit_clusterwise_augmented(data.dataset, planted_hp(10));
  ASSERT_GE(model.clusters.size(), 1u);
  const auto baseline = model.summary.baseline;
  double global = 0.0;
  for (const auto& s : data.dataset.samples) {
    double r = -s.target;
    for (std::size_t j = 0; j < 4; ++j) r += baseline.weights[j] * s.features[j];
    global += r * r;
  }
  EXPECT_LT(model.summary.final_sse, global);
}

TEST(Clusterwise, BaselineIsGlobalLeastSquares) {
  const auto data = generate_synthetic(planted_spec(1000, 3));
  const auto model = fit_clusterwise(data.dataset, planted_hp(3));
  oracle::Matrix x;
  std::vector<double> y;
  for (const auto& s : data.dataset.samples) {
    x.push_back({s.features[0], s.features[1], s.features[2], s.features[3]});
    y.push_back(s.target);
  }
  const auto w = oracle::normal_equations(x, y);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(model.summary.baseline.weights[j], w[j], 1e-9);
}

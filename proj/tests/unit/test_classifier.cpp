#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "ladle/classifier.hpp"
#include "ladle/error.hpp"
#include "ladle/random.hpp"

using namespace ladle;

namespace {

struct Labeled {
  Dataset ds;
  std::vector<std::size_t> labels;
};

// Labels from a noisy rule over three features so trees have work to do.
Labeled random_labeled(std::uint64_t seed, std::size_t n, std::size_t classes, double flip) {
  Rng rng(seed);
  Labeled out;
  out.ds.feature_names = {"a", "b", "c"};
  for (std::size_t i = 0; i < n; ++i) {
    MeltSample s;
    s.features = {rng.uniform(), rng.uniform(-1, 1), std::floor(rng.uniform(0, 4))};
    std::size_t label = static_cast<std::size_t>(s.features[0] * static_cast<double>(classes));
    if (s.features[1] > 0.5) label = (label + 1) % classes;
    if (rng.uniform() < flip) label = rng.index(classes);
    out.ds.samples.push_back(s);
    out.labels.push_back(label);
  }
  // Labels must be dense from zero.
  out.labels[0] = classes - 1;
  return out;
}

// Walks the stored tree without using the library's traversal.
std::size_t walk(const ClusterClassifier& clf, const std::vector<double>& x) {
  int node = 0;
  while (clf.nodes[node].feature >= 0) {
    const auto& n = clf.nodes[node];
    node = x[clf.feature_idx[n.feature]] < n.threshold ? n.left : n.right;
  }
  const auto& counts = clf.nodes[node].class_counts;
  std::size_t best = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  return best;
}

double gini_sum(const std::vector<std::size_t>& counts) {
  double n = 0.0, sq = 0.0;
  for (auto c : counts) {
    n += static_cast<double>(c);
    sq += static_cast<double>(c) * static_cast<double>(c);
  }
  return n == 0.0 ? 0.0 : n - sq / n;  // n * gini
}

}  // namespace

TEST(Classifier, AssignMatchesIndependentTraversal) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto data = random_labeled(seed, 600, 3 + seed % 3, 0.1);
    const std::vector<std::size_t> view{2, 0, 1};
    const auto clf = train_classifier(data.ds, data.labels, view);
    Rng rng(seed + 99);
    for (int t = 0; t < 300; ++t) {
      const std::vector<double> x{rng.uniform(), rng.uniform(-1, 1), std::floor(rng.uniform(0, 4))};
      ASSERT_EQ(clf.assign(x), walk(clf, x));
    }
  }
}

TEST(Classifier, RootSplitIsBestGiniSplit) {
  const auto data = random_labeled(3, 300, 3, 0.2);
  const std::vector<std::size_t> view{0, 1, 2};
  ClassifierOptions opts;
  opts.min_leaf = 5;
  const auto clf = train_classifier(data.ds, data.labels, view, opts);
  ASSERT_FALSE(clf.nodes[0].is_leaf());

  auto impurity_of = [&](std::size_t f, double threshold) {
    std::vector<std::size_t> left(3, 0), right(3, 0);
    for (std::size_t i = 0; i < data.ds.size(); ++i) {
      (data.ds.samples[i].features[view[f]] < threshold ? left : right)[data.labels[i]]++;
    }
    return gini_sum(left) + gini_sum(right);
  };
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < 3; ++f) {
    std::vector<double> values;
    for (const auto& s : data.ds.samples) values.push_back(s.features[view[f]]);
    std::sort(values.begin(), values.end());
    for (std::size_t i = opts.min_leaf - 1; i + opts.min_leaf < values.size(); ++i) {
      if (values[i] < values[i + 1]) best = std::min(best, impurity_of(f, 0.5 * (values[i] + values[i + 1])));
    }
  }
  const auto& root = clf.nodes[0];
  EXPECT_NEAR(impurity_of(static_cast<std::size_t>(root.feature), root.threshold), best, 1e-9);
}

TEST(Classifier, StructureRespectsLimits) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto data = random_labeled(seed, 800, 4, 0.15);
    ClassifierOptions opts;
    opts.max_depth = 1 + static_cast<int>(seed % 6);
    opts.min_leaf = 5 + seed * 3;
    const auto clf = train_classifier(data.ds, data.labels, std::vector<std::size_t>{0, 1, 2}, opts);
    EXPECT_LE(clf.depth(), static_cast<std::size_t>(opts.max_depth));
    std::size_t leaf_total = 0;
    for (std::size_t i = 0; i < clf.nodes.size(); ++i) {
      const auto& n = clf.nodes[i];
      std::size_t count = 0;
      for (auto c : n.class_counts) count += c;
      if (n.is_leaf()) {
        EXPECT_GE(count, opts.min_leaf);
        leaf_total += count;
      } else {
        // Preorder: the left child follows its parent directly.
        EXPECT_EQ(n.left, static_cast<int>(i) + 1);
        EXPECT_GT(n.right, n.left);
      }
    }
    EXPECT_EQ(leaf_total, data.ds.size());
  }
}

TEST(Classifier, TrainingAccuracyGrowsWithDepth) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto data = random_labeled(seed, 1000, 5, 0.05);
    double previous = 0.0;
    for (int depth = 0; depth <= 8; ++depth) {
      ClassifierOptions opts;
      opts.max_depth = depth;
      opts.min_leaf = 1;
      const auto clf = train_classifier(data.ds, data.labels, std::vector<std::size_t>{0, 1, 2}, opts);
      const double acc = training_accuracy(clf, data.ds, data.labels);
      EXPECT_GE(acc, previous - 1e-12) << "depth " << depth;
      previous = acc;
    }
  }
}

TEST(Classifier, SeparableSlabsClassifiedPerfectly) {
  Dataset ds;
  ds.feature_names = {"x"};
  std::vector<std::size_t> labels;
  for (int i = 0; i < 300; ++i) {
    const double x = i / 300.0;
    ds.samples.push_back({"", 0, {x}, 0.0});
    labels.push_back(x < 1.0 / 3 ? 0 : (x < 2.0 / 3 ? 1 : 2));
  }
  const auto clf = train_classifier(ds, labels, std::vector<std::size_t>{0});
  EXPECT_DOUBLE_EQ(training_accuracy(clf, ds, labels), 1.0);
  EXPECT_EQ(clf.assign(std::vector<double>{0.1}), 0u);
  EXPECT_EQ(clf.assign(std::vector<double>{0.5}), 1u);
  EXPECT_EQ(clf.assign(std::vector<double>{0.9}), 2u);
}

TEST(Classifier, SingleClassGivesConstantClassifier) {
  const auto data = random_labeled(1, 100, 2, 0.0);
  const std::vector<std::size_t> zeros(100, 0);
  const auto clf = train_classifier(data.ds, zeros, std::vector<std::size_t>{0});
  EXPECT_TRUE(clf.is_constant());
  ASSERT_EQ(clf.nodes.size(), 1u);
  EXPECT_EQ(clf.assign(std::vector<double>{5.0, 0.0, 0.0}), 0u);
}

TEST(Classifier, LeafTiesGoToLowestLabel) {
  ClusterClassifier clf;
  clf.n_classes = 3;
  clf.feature_idx = {0};
  clf.nodes = {{-1, 0.0, -1, -1, {2, 5, 5}}};
  EXPECT_EQ(clf.assign(std::vector<double>{0.0}), 1u);
}

TEST(Classifier, OneVsRestSeparatesLinearClasses) {
  Rng rng(4);
  Dataset ds;
  ds.feature_names = {"u", "v"};
  std::vector<std::size_t> labels;
  for (int i = 0; i < 600; ++i) {
    const double u = rng.uniform(-1, 1), v = rng.uniform(-1, 1);
    if (std::abs(u + v) < 0.1) continue;  // margin
    ds.samples.push_back({"", 0, {u, v}, 0.0});
    labels.push_back(u + v > 0 ? 1 : 0);
  }
  ClassifierOptions opts;
  opts.kind = ClassifierKind::OneVsRestLogistic;
  const auto clf = train_classifier(ds, labels, std::vector<std::size_t>{0, 1}, opts);
  ASSERT_EQ(clf.scorers.size(), 2u);
  EXPECT_GE(training_accuracy(clf, ds, labels), 0.99);
}

TEST(Classifier, OneVsRestHandlesThreeBands) {
  // The middle band is surrounded on both sides along x; the y feature
  // carries it, so a linear scorer per class can still win there.
  Rng rng(6);
  Dataset ds;
  ds.feature_names = {"x", "y"};
  std::vector<std::size_t> labels;
  for (int i = 0; i < 900; ++i) {
    const std::size_t c = static_cast<std::size_t>(i % 3);
    const double x = (c == 0 ? -1.0 : c == 2 ? 1.0 : 0.0) + 0.2 * rng.normal();
    const double y = (c == 1 ? 1.0 : 0.0) + 0.2 * rng.normal();
    ds.samples.push_back({"", 0, {x, y}, 0.0});
    labels.push_back(c);
  }
  ClassifierOptions opts;
  opts.kind = ClassifierKind::OneVsRestLogistic;
  const auto clf = train_classifier(ds, labels, std::vector<std::size_t>{0, 1}, opts);
  EXPECT_GE(training_accuracy(clf, ds, labels), 0.95);
}

TEST(Classifier, KindNamesRoundTrip) {
  for (auto kind : {ClassifierKind::DecisionTree, ClassifierKind::OneVsRestLogistic}) {
    EXPECT_EQ(classifier_kind_from_string(to_string(kind)), kind);
  }
  EXPECT_THROW(classifier_kind_from_string("gbdt"), Error);
}

TEST(Classifier, RejectsBadInput) {
  const auto data = random_labeled(1, 50, 2, 0.0);
  EXPECT_THROW(train_classifier(data.ds, std::vector<std::size_t>(3, 0), std::vector<std::size_t>{0}), Error);
  EXPECT_THROW(train_classifier(data.ds, data.labels, std::vector<std::size_t>{7}), Error);
}

#include "ladle/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "ladle/error.hpp"

namespace ladle {
namespace {

constexpr double kMinGain = 1e-12;
constexpr double kLogisticRidge = 1e-3;
constexpr int kLogisticMaxIters = 100;

std::size_t argmax_lowest(std::span<const std::size_t> counts) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  return best;
}

struct SplitCandidate {
  double impurity = 0.0;  // weighted child gini, scaled by node size
  int feature = -1;
  double threshold = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& dataset, std::span<const std::size_t> labels,
              std::span<const std::size_t> feature_idx, std::size_t n_classes,
              const ClassifierOptions& options)
      : dataset_(dataset),
        labels_(labels),
        feature_idx_(feature_idx),
        n_classes_(n_classes),
        options_(options) {}

  std::vector<TreeNode> build() {
    std::vector<std::size_t> all(dataset_.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    grow(all, 0);
    return std::move(nodes_);
  }

 private:
  double value(std::size_t sample, std::size_t view_column) const {
    return dataset_.samples[sample].features[feature_idx_[view_column]];
  }

  int grow(std::vector<std::size_t>& members, int depth) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    std::vector<std::size_t> counts(n_classes_, 0);
    for (std::size_t s : members) ++counts[labels_[s]];
    nodes_[index].class_counts = counts;

    const bool pure = std::count_if(counts.begin(), counts.end(),
                                    [](std::size_t c) { return c > 0; }) <= 1;
    if (pure || depth >= options_.max_depth || members.size() < 2 * options_.min_leaf) {
      return index;
    }

    const auto split = best_split(members, counts);
    if (split.feature < 0) return index;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t s : members) {
      (value(s, static_cast<std::size_t>(split.feature)) < split.threshold ? left : right)
          .push_back(s);
    }
    members.clear();
    members.shrink_to_fit();

    nodes_[index].feature = split.feature;
    nodes_[index].threshold = split.threshold;
    const int l = grow(left, depth + 1);
    nodes_[index].left = l;
    const int r = grow(right, depth + 1);
    nodes_[index].right = r;
    return index;
  }

  SplitCandidate best_split(const std::vector<std::size_t>& members,
                            const std::vector<std::size_t>& counts) const {
    const auto n = static_cast<double>(members.size());
    double parent_sumsq = 0.0;
    for (std::size_t c : counts) parent_sumsq += static_cast<double>(c) * static_cast<double>(c);
    // n * gini = n - sumsq / n
    const double parent_impurity = n - parent_sumsq / n;

    SplitCandidate best;
    best.impurity = parent_impurity - kMinGain;

    std::vector<std::size_t> order(members);
    std::vector<std::size_t> left_counts(n_classes_);
    std::vector<std::size_t> right_counts(n_classes_);
    for (std::size_t f = 0; f < feature_idx_.size(); ++f) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = value(a, f);
        const double vb = value(b, f);
        return va < vb || (va == vb && a < b);
      });
      std::fill(left_counts.begin(), left_counts.end(), 0);
      right_counts = counts;
      double left_sumsq = 0.0;
      double right_sumsq = parent_sumsq;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const std::size_t cls = labels_[order[i]];
        left_sumsq += 2.0 * static_cast<double>(left_counts[cls]) + 1.0;
        right_sumsq -= 2.0 * static_cast<double>(right_counts[cls]) - 1.0;
        ++left_counts[cls];
        --right_counts[cls];

        const std::size_t n_left = i + 1;
        const std::size_t n_right = order.size() - n_left;
        if (n_left < options_.min_leaf) continue;
        if (n_right < options_.min_leaf) break;
        const double lo = value(order[i], f);
        const double hi = value(order[i + 1], f);
        if (!(lo < hi)) continue;

        const double impurity = (static_cast<double>(n_left) - left_sumsq / static_cast<double>(n_left)) +
                                (static_cast<double>(n_right) - right_sumsq / static_cast<double>(n_right));
        if (impurity < best.impurity) {
          double threshold = lo + 0.5 * (hi - lo);
          if (!(threshold > lo)) threshold = hi;
          best = {impurity, static_cast<int>(f), threshold};
        }
      }
    }
    return best;
  }

  const Dataset& dataset_;
  std::span<const std::size_t> labels_;
  std::span<const std::size_t> feature_idx_;
  std::size_t n_classes_;
  ClassifierOptions options_;
  std::vector<TreeNode> nodes_;
};

// Penalized logistic regression of one class against the rest, by Newton's
// method on standardized features. The small ridge term keeps the weights
// finite when the classes are separable.
LinearScorer fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();  // last column is the intercept
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p, kLogisticRidge);
  penalty[p - 1] = 0.0;

  auto objective = [&](const Eigen::VectorXd& beta) {
    const Eigen::VectorXd margin = (x * beta).cwiseProduct(y);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = margin[i];
      total += m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
    }
    return total + 0.5 * beta.cwiseProduct(penalty).dot(beta);
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double current = objective(beta);
  for (int iter = 0; iter < kLogisticMaxIters; ++iter) {
    const Eigen::VectorXd z = x * beta;
    Eigen::VectorXd grad = penalty.cwiseProduct(beta);
    Eigen::VectorXd curvature(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double prob = 1.0 / (1.0 + std::exp(-z[i]));  // P(y = +1)
      const double target = y[i] > 0 ? 1.0 : 0.0;
      grad += (prob - target) * x.row(i).transpose();
      curvature[i] = std::max(prob * (1.0 - prob), 1e-12);
    }
    Eigen::MatrixXd hessian = x.transpose() * curvature.asDiagonal() * x;
    hessian.diagonal() += penalty;
    hessian.diagonal().array() += 1e-12;
    const Eigen::VectorXd step = hessian.ldlt().solve(grad);

    double scale = 1.0;
    Eigen::VectorXd next = beta - step;
    double value = objective(next);
    while (value > current && scale > 1e-8) {
      scale *= 0.5;
      next = beta - scale * step;
      value = objective(next);
    }
    if (value > current) break;
    const double moved = (next - beta).lpNorm<Eigen::Infinity>();
    beta = next;
    const double improvement = current - value;
    current = value;
    if (moved < 1e-10 || improvement < 1e-14 * (1.0 + current)) break;
  }
  LinearScorer out;
  out.weights.assign(beta.data(), beta.data() + (p - 1));
  out.intercept = beta[p - 1];
  return out;
}

std::vector<LinearScorer> train_one_vs_rest(const Dataset& dataset,
                                            std::span<const std::size_t> labels,
                                            std::span<const std::size_t> feature_idx,
                                            std::size_t n_classes) {
  const auto n = static_cast<Eigen::Index>(dataset.size());
  const auto d = static_cast<Eigen::Index>(feature_idx.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(d);
  Eigen::MatrixXd x(n, d + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      x(i, j) = dataset.samples[static_cast<std::size_t>(i)].features[feature_idx[static_cast<std::size_t>(j)]];
    }
    x(i, d) = 1.0;
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    mean[j] = x.col(j).mean();
    const double sd = std::sqrt((x.col(j).array() - mean[j]).square().mean());
    scale[j] = sd > 0.0 ? sd : 1.0;
    x.col(j) = (x.col(j).array() - mean[j]) / scale[j];
  }

  std::vector<LinearScorer> scorers;
  scorers.reserve(n_classes);
  Eigen::VectorXd y(n);
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) y[i] = labels[static_cast<std::size_t>(i)] == c ? 1.0 : -1.0;
    auto scorer = fit_logistic(x, y);
    // Back to raw feature units.
    for (Eigen::Index j = 0; j < d; ++j) {
      scorer.weights[static_cast<std::size_t>(j)] /= scale[j];
      scorer.intercept -= scorer.weights[static_cast<std::size_t>(j)] * mean[j];
    }
    scorers.push_back(std::move(scorer));
  }
  return scorers;
}

}  // namespace

std::string_view to_string(ClassifierKind kind) noexcept {
  return kind == ClassifierKind::DecisionTree ? "decision_tree" : "one_vs_rest_logistic";
}

ClassifierKind classifier_kind_from_string(std::string_view name) {
  if (name == "decision_tree") return ClassifierKind::DecisionTree;
  if (name == "one_vs_rest_logistic" || name == "one_vs_rest") return ClassifierKind::OneVsRestLogistic;
  throw Error(ErrorCode::InvalidArgument, "unknown classifier kind '" + std::string(name) + "'");
}

std::size_t ClusterClassifier::leaf_index(std::span<const double> features) const {
  if (nodes.empty()) throw Error(ErrorCode::ModelNotFitted, "classifier has no tree");
  std::size_t node = 0;
  while (!nodes[node].is_leaf()) {
    const auto& n = nodes[node];
    const double x = features[feature_idx.at(static_cast<std::size_t>(n.feature))];
    node = static_cast<std::size_t>(x < n.threshold ? n.left : n.right);
  }
  return node;
}

std::size_t ClusterClassifier::assign(std::span<const double> features) const {
  if (is_constant()) return 0;
  if (kind == ClassifierKind::DecisionTree) {
    return argmax_lowest(nodes[leaf_index(features)].class_counts);
  }
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < scorers.size(); ++c) {
    double score = scorers[c].intercept;
    for (std::size_t j = 0; j < feature_idx.size(); ++j) {
      score += scorers[c].weights[j] * features[feature_idx[j]];
    }
    if (score > best_score) {
      best_score = score;
      best = c;
    }
  }
  return best;
}

std::size_t ClusterClassifier::depth() const {
  if (nodes.empty()) return 0;
  std::size_t deepest = 0;
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [node, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[node].is_leaf()) {
      stack.emplace_back(nodes[node].left, d + 1);
      stack.emplace_back(nodes[node].right, d + 1);
    }
  }
  return deepest;
}

ClusterClassifier train_classifier(const Dataset& dataset, std::span<const std::size_t> labels,
                                   std::span<const std::size_t> clf_feature_idx,
                                   const ClassifierOptions& options) {
  if (labels.size() != dataset.size()) {
    throw Error(ErrorCode::InvalidArgument, "label count does not match dataset size");
  }
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "cannot train classifier on no samples");
  if (options.max_depth < 0 || options.min_leaf == 0) {
    throw Error(ErrorCode::InvalidArgument, "classifier needs max_depth >= 0 and min_leaf >= 1");
  }
  for (std::size_t f : clf_feature_idx) {
    if (f >= dataset.dimension()) {
      throw Error(ErrorCode::InvalidArgument, "classifier feature index out of range");
    }
  }

  ClusterClassifier clf;
  clf.kind = options.kind;
  clf.feature_idx.assign(clf_feature_idx.begin(), clf_feature_idx.end());
  clf.n_classes = *std::max_element(labels.begin(), labels.end()) + 1;

  if (clf.is_constant()) {
    TreeNode leaf;
    leaf.class_counts = {labels.size()};
    clf.nodes.push_back(leaf);
    return clf;
  }
  if (options.kind == ClassifierKind::DecisionTree) {
    clf.nodes = TreeBuilder(dataset, labels, clf_feature_idx, clf.n_classes, options).build();
  } else {
    clf.scorers = train_one_vs_rest(dataset, labels, clf_feature_idx, clf.n_classes);
  }
  return clf;
}

std::size_t assign_cluster(const ClusterClassifier& classifier, const MeltSample& sample) {
  return classifier.assign(sample.features);
}

double training_accuracy(const ClusterClassifier& classifier, const Dataset& dataset,
                         std::span<const std::size_t> labels) {
  if (dataset.empty()) return 1.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (classifier.assign(dataset.samples[i]) == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(dataset.size());
}

}  // namespace ladle

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "ladle/sample.hpp"

namespace ladle {

enum class ClassifierKind { DecisionTree, OneVsRestLogistic };

std::string_view to_string(ClassifierKind kind) noexcept;
ClassifierKind classifier_kind_from_string(std::string_view name);

struct ClassifierOptions {
  ClassifierKind kind = ClassifierKind::DecisionTree;
  int max_depth = 8;
  std::size_t min_leaf = 20;
};

/// Tree node in preorder storage. Leaves have feature == -1 and carry the
/// class histogram of the training samples that reached them.
struct TreeNode {
  int feature = -1;  // position within clf_feature_idx
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<std::size_t> class_counts;

  bool is_leaf() const noexcept { return feature < 0; }
};

/// One-vs-rest logistic scorer: logit = intercept + dot(weights, x), the
/// highest logit wins.
struct LinearScorer {
  std::vector<double> weights;
  double intercept = 0.0;
};

/// Assigns a sample to a cluster from the (wider) classification feature view.
class ClusterClassifier {
 public:
  ClassifierKind kind = ClassifierKind::DecisionTree;
  std::vector<std::size_t> feature_idx;
  std::size_t n_classes = 1;
  std::vector<TreeNode> nodes;
  std::vector<LinearScorer> scorers;

  // True when only one class was seen in training; every sample maps to 0.
  bool is_constant() const noexcept { return n_classes <= 1; }

  // Takes the full feature vector of a sample.
  std::size_t assign(std::span<const double> features) const;
  std::size_t assign(const MeltSample& sample) const { return assign(sample.features); }

  // Index of the tree leaf reached by the sample (decision trees only).
  std::size_t leaf_index(std::span<const double> features) const;

  std::size_t depth() const;
};

// labels must be dense in 0..n_classes-1; n_classes is max(labels)+1.
ClusterClassifier train_classifier(const Dataset& dataset, std::span<const std::size_t> labels,
                                   std::span<const std::size_t> clf_feature_idx,
                                   const ClassifierOptions& options = {});

std::size_t assign_cluster(const ClusterClassifier& classifier, const MeltSample& sample);

double training_accuracy(const ClusterClassifier& classifier, const Dataset& dataset,
                         std::span<const std::size_t> labels);

}  // namespace ladle

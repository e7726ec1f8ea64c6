#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ladle/classifier.hpp"
#include "ladle/ols.hpp"
#include "ladle/sample.hpp"

namespace ladle {

/// Settings of the clusterwise regression fit.
///
/// n_clusters clusters are seeded with init_per_cluster random samples each,
/// clusters that end a reassignment pass with fewer than min_cluster_size
/// members are removed, and iteration stops once fewer than
/// convergence_threshold samples change cluster (or max_iters is reached).
struct Hyperparams {
  std::size_t n_clusters = 10;
  std::size_t init_per_cluster = 0;  // 0: derive from dataset size, see resolved()
  std::size_t min_cluster_size = 50;
  std::size_t convergence_threshold = 10;
  std::size_t max_iters = 100;
  bool use_intercept = false;
  std::uint64_t seed = 0;
  std::vector<std::size_t> lr_feature_idx;
  std::vector<std::size_t> clf_feature_idx;
  bool normalize = false;
  std::vector<WeightBound> weight_bounds;  // raw feature units, one per lr feature
  ClassifierOptions classifier;

  // Copy with init_per_cluster filled in as 0.5 * n_samples / n_clusters when
  // it was left at 0.
  Hyperparams resolved(std::size_t n_samples) const;

  // Throws InvalidArgument / InsufficientData when the settings cannot be used
  // on a dataset of this shape.
  void validate(std::size_t n_samples, std::size_t dimension) const;
};

// Defaults for a dataset: K = max(50, 2 * |lr features|), M = 10, no intercept.
Hyperparams default_hyperparams(std::vector<std::size_t> lr_feature_idx,
                                std::vector<std::size_t> clf_feature_idx,
                                std::size_t n_clusters = 10);

struct IterationRecord {
  std::size_t moved = 0;
  std::size_t pruned = 0;
  std::size_t clusters = 0;
  // SSE of assigned samples right after the per-cluster refit.
  double sse_after_fit = 0.0;
  // SSE of all samples against the same models after reassignment/pruning.
  double sse_after_assign = 0.0;
};

struct TrainingSummary {
  std::size_t iterations = 0;
  std::size_t clusters_pruned = 0;
  bool converged = false;
  std::vector<IterationRecord> history;
  double final_sse = 0.0;
  std::size_t n_train = 0;
  // Single global regression on the same training data and feature view.
  ClusterModel baseline;
};

/// Names and roles of the feature columns a model was trained on.
struct FeatureSchema {
  std::string element;
  std::vector<std::string> feature_names;
  // Column holding the added element in share-points of melt mass; the
  // recommender varies it. Empty when the model has no addition feature.
  std::string addition_feature;
};

class ClusterwiseRegressor {
 public:
  std::vector<ClusterModel> clusters;
  std::vector<std::size_t> assignments;  // per training sample, empty after load
  Hyperparams hyperparams;
  FeatureScaling scaling;
  std::optional<ClusterClassifier> classifier;
  TrainingSummary summary;
  FeatureSchema schema;

  bool fitted() const noexcept { return !clusters.empty() && classifier.has_value(); }

  // Prediction of one cluster's regression for a full feature vector.
  double predict_in_cluster(std::size_t cluster, std::span<const double> features) const;

  // Weights and intercept mapped back to raw feature units (identical to the
  // stored ones unless normalization is enabled).
  ClusterModel raw_coefficients(std::size_t cluster) const;

  double baseline_predict(std::span<const double> features) const;
};

struct FitOptions {
  // Worker threads for per-cluster fits and per-sample errors. Results are
  // reduced in index order, so any thread count gives identical output.
  unsigned threads = 1;
};

ClusterwiseRegressor fit_clusterwise(const Dataset& dataset, const Hyperparams& hp,
                                     const FitOptions& options = {});

// Experimental variant: reassignment is nearest-centroid on the standardized
// classification features extended with each cluster's scaled residual.
ClusterwiseRegressor fit_clusterwise_augmented(const Dataset& dataset, const Hyperparams& hp,
                                               const FitOptions& options = {});

// Trains the classifier on the regressor's own assignments.
void attach_classifier(ClusterwiseRegressor& regressor, const Dataset& dataset);

// fit_clusterwise followed by attach_classifier, with schema taken from the
// dataset.
ClusterwiseRegressor fit_model(const Dataset& dataset, const Hyperparams& hp,
                               const FitOptions& options = {}, bool augmented = false);

std::size_t assign_cluster(const ClusterwiseRegressor& regressor, const MeltSample& sample);

double predict(const ClusterwiseRegressor& regressor, const MeltSample& sample);
double predict(const ClusterwiseRegressor& regressor, std::span<const double> features);

double total_sse(const ClusterwiseRegressor& regressor, const Dataset& dataset);

}  // namespace ladle

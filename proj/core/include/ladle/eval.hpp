#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ladle/clusterwise.hpp"
#include "ladle/sample.hpp"

namespace ladle {

struct ClusterReport {
  std::size_t cluster_id = 0;
  std::size_t size = 0;        // training members
  std::size_t test_count = 0;  // test samples routed here by the classifier
  double cluster_mae = 0.0;    // 0 when no test sample was routed here
};

struct EvalReport {
  double mae = 0.0;
  double median_abs_error = 0.0;
  double p90_abs_error = 0.0;
  double baseline_mae = 0.0;
  std::size_t n_test = 0;
  std::vector<ClusterReport> per_cluster;
};

// Inclusive percentile with linear interpolation between order statistics
// (q in [0, 1]): position q * (n - 1) in the sorted values.
double percentile(std::span<const double> values, double q);

// Throws EmptyTest for an empty test set, ModelNotFitted without classifier.
EvalReport evaluate(const ClusterwiseRegressor& regressor, const Dataset& test);

struct SearchSpace {
  std::vector<std::size_t> n_clusters;             // default 2..30
  std::vector<std::size_t> min_cluster_size;       // default {max(50, 2|lr|)}
  std::vector<std::size_t> convergence_threshold;  // default {10}
  std::vector<double> init_fraction;               // N = f * n / n_clusters; default {0.5}
};

SearchSpace default_search_space(const Hyperparams& base);

struct TuneOptions {
  std::size_t budget = 20;
  std::uint64_t seed = 0;
  double inner_train_fraction = 0.75;
  unsigned threads = 1;
};

struct TrialRecord {
  std::size_t index = 0;
  double init_fraction = 0.5;
  Hyperparams hyperparams;
  double validation_mae = 0.0;  // +inf for a failed fit
  std::string error;
};

struct TuneResult {
  Hyperparams best;
  std::size_t best_trial = 0;
  std::vector<TrialRecord> trials;
};

// Seeded random search: the grid spanned by the space is shuffled and walked
// in that order (wrapping when the budget exceeds the grid, with a fresh fit
// seed per trial). Each trial fits on the early part of an inner time split
// and is scored by MAE on the rest. Ties keep the earliest trial.
TuneResult tune(const Dataset& dataset, const Hyperparams& base, const SearchSpace& space,
                const TuneOptions& options);

}  // namespace ladle

#include "ladle/clusterwise.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include "ladle/error.hpp"
#include "ladle/random.hpp"
#include "parallel.hpp"

namespace ladle {
namespace {

constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();

void check_indices(const std::vector<std::size_t>& idx, std::size_t dimension, const char* what) {
  std::set<std::size_t> seen;
  for (std::size_t i : idx) {
    if (i >= dimension) {
      throw Error(ErrorCode::InvalidArgument, std::string(what) + " index " + std::to_string(i) +
                                                  " out of range for dimension " +
                                                  std::to_string(dimension));
    }
    if (!seen.insert(i).second) {
      throw Error(ErrorCode::InvalidArgument,
                  std::string(what) + " index " + std::to_string(i) + " repeated");
    }
  }
}

FeatureScaling compute_scaling(const Dataset& ds, const Hyperparams& hp) {
  FeatureScaling scaling;
  const std::size_t p = hp.lr_feature_idx.size();
  scaling.mean.assign(p, 0.0);
  scaling.scale.assign(p, 1.0);
  const auto n = static_cast<double>(ds.size());
  for (std::size_t j = 0; j < p; ++j) {
    const std::size_t f = hp.lr_feature_idx[j];
    double mean = 0.0;
    if (hp.use_intercept) {
      for (const auto& s : ds.samples) mean += s.features[f];
      mean /= n;
    }
    // Without an intercept the map stays linear: scale by RMS, do not center.
    double spread = 0.0;
    for (const auto& s : ds.samples) spread += (s.features[f] - mean) * (s.features[f] - mean);
    spread = std::sqrt(spread / n);
    scaling.mean[j] = mean;
    scaling.scale[j] = spread > 0.0 ? spread : 1.0;
  }
  return scaling;
}

// Cost of every sample against every live cluster, row-major n x live.size().
using CostFn = std::function<void(const std::vector<ClusterModel>& models,
                                  const std::vector<std::size_t>& live,
                                  const std::vector<std::size_t>& assign, std::vector<double>& cost)>;

class ClusterwiseFit {
 public:
  ClusterwiseFit(const Dataset& ds, const Hyperparams& hp, const FitOptions& options)
      : ds_(ds), hp_(hp.resolved(ds.size())), options_(options) {
    hp_.validate(ds.size(), ds.dimension());
    if (hp_.normalize) scaling_ = compute_scaling(ds, hp_);
    design_ = DesignMatrix::from_samples(ds.samples, hp_.lr_feature_idx, scaling_);
    ls_.use_intercept = hp_.use_intercept;
    if (!hp_.weight_bounds.empty()) {
      ls_.bounds = hp_.weight_bounds;
      for (std::size_t j = 0; j < ls_.bounds.size(); ++j) {
        const double s = scaling_.enabled() ? scaling_.scale[j] : 1.0;
        ls_.bounds[j].lower *= s;
        ls_.bounds[j].upper *= s;
      }
    }
  }

  const DesignMatrix& design() const noexcept { return design_; }
  const Hyperparams& hyperparams() const noexcept { return hp_; }
  unsigned threads() const noexcept { return options_.threads; }

  double error(const ClusterModel& model, std::size_t row) const noexcept {
    const double r = predict_linear(model, design_.row(row)) - design_.target(row);
    return r * r;
  }

  ClusterwiseRegressor run(const CostFn& cost_fn) const {
    const std::size_t n = ds_.size();
    const std::size_t k = hp_.n_clusters;

    std::vector<std::size_t> assign(n, kUnassigned);
    {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng rng(hp_.seed);
      rng.shuffle(std::span<std::size_t>(order));
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t t = 0; t < hp_.init_per_cluster; ++t) {
          assign[order[c * hp_.init_per_cluster + t]] = c;
        }
      }
    }

    std::vector<std::size_t> live(k);
    std::iota(live.begin(), live.end(), std::size_t{0});
    std::vector<ClusterModel> models(k);
    TrainingSummary summary;
    std::vector<double> cost;
    std::vector<double> per_sample(n);

    for (std::size_t iter = 0; iter < hp_.max_iters; ++iter) {
      fit_live(assign, live, models);

      IterationRecord record;
      detail::parallel_for(n, options_.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
          per_sample[i] = assign[i] == kUnassigned ? 0.0 : error(models[assign[i]], i);
        }
      });
      record.sse_after_fit = ordered_sum(per_sample);

      cost.assign(n * live.size(), 0.0);
      cost_fn(models, live, assign, cost);

      std::vector<std::size_t> best = argmin_columns(cost, live.size(), std::vector<bool>(live.size(), true));
      std::vector<std::size_t> counts(live.size(), 0);
      for (std::size_t col : best) ++counts[col];
      std::vector<bool> keep(live.size());
      std::size_t kept = 0;
      for (std::size_t c = 0; c < live.size(); ++c) {
        keep[c] = counts[c] >= hp_.min_cluster_size;
        kept += keep[c] ? 1 : 0;
      }
      if (kept == 0) {
        throw Error(ErrorCode::AllClustersPruned,
                    "every cluster fell below min_cluster_size=" + std::to_string(hp_.min_cluster_size));
      }
      record.pruned = live.size() - kept;
      if (record.pruned > 0) {
        // Samples of removed clusters move to their best surviving cluster.
        const auto fallback = argmin_columns(cost, live.size(), keep);
        for (std::size_t i = 0; i < n; ++i) {
          if (!keep[best[i]]) best[i] = fallback[i];
        }
      }

      std::vector<std::size_t> next(n);
      for (std::size_t i = 0; i < n; ++i) next[i] = live[best[i]];
      for (std::size_t i = 0; i < n; ++i) {
        if (next[i] != assign[i]) ++record.moved;
      }
      detail::parallel_for(n, options_.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) per_sample[i] = error(models[next[i]], i);
      });
      record.sse_after_assign = ordered_sum(per_sample);

      std::vector<std::size_t> survivors;
      for (std::size_t c = 0; c < live.size(); ++c) {
        if (keep[c]) survivors.push_back(live[c]);
      }
      live = std::move(survivors);
      record.clusters = live.size();
      summary.clusters_pruned += record.pruned;
      summary.history.push_back(record);
      assign = std::move(next);

      if (record.moved < hp_.convergence_threshold) {
        summary.converged = true;
        break;
      }
    }
    summary.iterations = summary.history.size();

    fit_live(assign, live, models);

    ClusterwiseRegressor out;
    std::vector<std::size_t> dense(k, kUnassigned);
    for (std::size_t c = 0; c < live.size(); ++c) {
      dense[live[c]] = c;
      out.clusters.push_back(models[live[c]]);
    }
    out.assignments.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.assignments[i] = dense[assign[i]];
    for (const auto& m : out.clusters) summary.final_sse += m.sse;
    summary.n_train = n;
    summary.baseline = fit_least_squares(design_, ls_);

    out.hyperparams = hp_;
    out.scaling = scaling_;
    out.summary = std::move(summary);
    out.schema.element = ds_.element;
    out.schema.feature_names = ds_.feature_names;
    return out;
  }

 private:
  static double ordered_sum(const std::vector<double>& values) {
    double total = 0.0;
    for (double v : values) total += v;
    return total;
  }

  // Per row, the lowest-index allowed column with minimal cost.
  std::vector<std::size_t> argmin_columns(const std::vector<double>& cost, std::size_t cols,
                                          const std::vector<bool>& allowed) const {
    const std::size_t n = ds_.size();
    std::vector<std::size_t> best(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      double best_cost = std::numeric_limits<double>::infinity();
      std::size_t best_col = kUnassigned;
      for (std::size_t c = 0; c < cols; ++c) {
        if (!allowed[c]) continue;
        const double v = cost[i * cols + c];
        if (best_col == kUnassigned || v < best_cost) {
          best_cost = v;
          best_col = c;
        }
      }
      best[i] = best_col;
    }
    return best;
  }

  void fit_live(const std::vector<std::size_t>& assign, const std::vector<std::size_t>& live,
                std::vector<ClusterModel>& models) const {
    std::vector<std::vector<std::size_t>> members(hp_.n_clusters);
    for (std::size_t i = 0; i < assign.size(); ++i) {
      if (assign[i] != kUnassigned) members[assign[i]].push_back(i);
    }
    detail::parallel_for(live.size(), options_.threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t c = b; c < e; ++c) {
        models[live[c]] = fit_least_squares(design_, members[live[c]], ls_);
      }
    });
  }

  const Dataset& ds_;
  Hyperparams hp_;
  FitOptions options_;
  FeatureScaling scaling_;
  DesignMatrix design_;
  LeastSquaresOptions ls_;
};

}  // namespace

Hyperparams Hyperparams::resolved(std::size_t n_samples) const {
  Hyperparams out = *this;
  if (out.init_per_cluster == 0 && out.n_clusters > 0) {
    out.init_per_cluster = std::max<std::size_t>(1, n_samples / (2 * out.n_clusters));
  }
  return out;
}

void Hyperparams::validate(std::size_t n_samples, std::size_t dimension) const {
  auto invalid = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  if (n_clusters == 0) invalid("n_clusters must be positive");
  if (init_per_cluster == 0) invalid("init_per_cluster must be positive");
  if (min_cluster_size == 0) invalid("min_cluster_size must be positive");
  if (max_iters == 0) invalid("max_iters must be positive");
  if (lr_feature_idx.empty()) invalid("lr_feature_idx must not be empty");
  check_indices(lr_feature_idx, dimension, "lr_feature_idx");
  check_indices(clf_feature_idx, dimension, "clf_feature_idx");
  const std::size_t params = lr_feature_idx.size() + (use_intercept ? 1 : 0);
  if (params >= min_cluster_size) {
    invalid("min_cluster_size must exceed the number of regression parameters (" +
            std::to_string(params) + ")");
  }
  if (init_per_cluster < params) {
    invalid("init_per_cluster must be at least the number of regression parameters (" +
            std::to_string(params) + ")");
  }
  if (!weight_bounds.empty()) {
    if (weight_bounds.size() != lr_feature_idx.size()) invalid("weight_bounds must match lr_feature_idx");
    for (const auto& b : weight_bounds) {
      if (!(b.lower <= b.upper)) invalid("weight bound lower exceeds upper");
    }
  }
  const std::size_t needed = n_clusters * std::max(init_per_cluster, min_cluster_size);
  if (n_samples < needed) {
    throw Error(ErrorCode::InsufficientData,
                "dataset has " + std::to_string(n_samples) + " samples, need at least " +
                    std::to_string(needed) + " for " + std::to_string(n_clusters) + " clusters");
  }
}

Hyperparams default_hyperparams(std::vector<std::size_t> lr_feature_idx,
                                std::vector<std::size_t> clf_feature_idx, std::size_t n_clusters) {
  Hyperparams hp;
  hp.n_clusters = n_clusters;
  hp.min_cluster_size = std::max<std::size_t>(50, 2 * lr_feature_idx.size());
  hp.convergence_threshold = 10;
  hp.max_iters = 100;
  hp.use_intercept = false;
  hp.lr_feature_idx = std::move(lr_feature_idx);
  hp.clf_feature_idx = std::move(clf_feature_idx);
  return hp;
}

double ClusterwiseRegressor::predict_in_cluster(std::size_t cluster,
                                                std::span<const double> features) const {
  const auto& model = clusters.at(cluster);
  double value = model.intercept;
  for (std::size_t j = 0; j < model.weights.size(); ++j) {
    value += model.weights[j] * scaling.apply(j, features[hyperparams.lr_feature_idx[j]]);
  }
  return value;
}

ClusterModel ClusterwiseRegressor::raw_coefficients(std::size_t cluster) const {
  ClusterModel raw = clusters.at(cluster);
  if (!scaling.enabled()) return raw;
  for (std::size_t j = 0; j < raw.weights.size(); ++j) {
    raw.weights[j] = clusters[cluster].weights[j] / scaling.scale[j];
    raw.intercept -= raw.weights[j] * scaling.mean[j];
  }
  return raw;
}

double ClusterwiseRegressor::baseline_predict(std::span<const double> features) const {
  const auto& model = summary.baseline;
  double value = model.intercept;
  for (std::size_t j = 0; j < model.weights.size(); ++j) {
    value += model.weights[j] * scaling.apply(j, features[hyperparams.lr_feature_idx[j]]);
  }
  return value;
}

ClusterwiseRegressor fit_clusterwise(const Dataset& dataset, const Hyperparams& hp,
                                     const FitOptions& options) {
  ClusterwiseFit fit(dataset, hp, options);
  const std::size_t n = dataset.size();
  return fit.run([&](const std::vector<ClusterModel>& models, const std::vector<std::size_t>& live,
                     const std::vector<std::size_t>&, std::vector<double>& cost) {
    const std::size_t cols = live.size();
    detail::parallel_for(n, fit.threads(), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        for (std::size_t c = 0; c < cols; ++c) cost[i * cols + c] = fit.error(models[live[c]], i);
      }
    });
  });
}

ClusterwiseRegressor fit_clusterwise_augmented(const Dataset& dataset, const Hyperparams& hp,
                                               const FitOptions& options) {
  ClusterwiseFit fit(dataset, hp, options);
  const std::size_t n = dataset.size();
  const auto& clf_idx = fit.hyperparams().clf_feature_idx;
  const std::size_t base_dim = clf_idx.size();

  // Standardized classification view, computed once.
  std::vector<double> base(n * base_dim);
  for (std::size_t j = 0; j < base_dim; ++j) {
    double mean = 0.0;
    for (const auto& s : dataset.samples) mean += s.features[clf_idx[j]];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& s : dataset.samples) {
      const double d = s.features[clf_idx[j]] - mean;
      var += d * d;
    }
    const double sd = var > 0.0 ? std::sqrt(var / static_cast<double>(n)) : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      base[i * base_dim + j] = (dataset.samples[i].features[clf_idx[j]] - mean) / sd;
    }
  }
  double target_sd = 0.0;
  {
    double mean = 0.0;
    for (const auto& s : dataset.samples) mean += s.target;
    mean /= static_cast<double>(n);
    for (const auto& s : dataset.samples) target_sd += (s.target - mean) * (s.target - mean);
    target_sd = std::sqrt(target_sd / static_cast<double>(n));
    if (!(target_sd > 0.0)) target_sd = 1.0;
  }

  return fit.run([&](const std::vector<ClusterModel>& models, const std::vector<std::size_t>& live,
                     const std::vector<std::size_t>& assign, std::vector<double>& cost) {
    const std::size_t cols = live.size();
    const std::size_t dim = base_dim + cols;
    const auto& design = fit.design();

    std::vector<double> view(n * dim);
    detail::parallel_for(n, fit.threads(), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        double* z = view.data() + i * dim;
        std::copy_n(base.data() + i * base_dim, base_dim, z);
        for (std::size_t c = 0; c < cols; ++c) {
          z[base_dim + c] =
              (predict_linear(models[live[c]], design.row(i)) - design.target(i)) / target_sd;
        }
      }
    });

    std::vector<std::size_t> column_of(fit.hyperparams().n_clusters, kUnassigned);
    for (std::size_t c = 0; c < cols; ++c) column_of[live[c]] = c;
    std::vector<double> centroids(cols * dim, 0.0);
    std::vector<std::size_t> sizes(cols, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (assign[i] == kUnassigned) continue;
      const std::size_t c = column_of[assign[i]];
      ++sizes[c];
      for (std::size_t d = 0; d < dim; ++d) centroids[c * dim + d] += view[i * dim + d];
    }
    for (std::size_t c = 0; c < cols; ++c) {
      for (std::size_t d = 0; d < dim; ++d) centroids[c * dim + d] /= static_cast<double>(sizes[c]);
    }

    detail::parallel_for(n, fit.threads(), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        for (std::size_t c = 0; c < cols; ++c) {
          double dist = 0.0;
          for (std::size_t d = 0; d < dim; ++d) {
            const double delta = view[i * dim + d] - centroids[c * dim + d];
            dist += delta * delta;
          }
          cost[i * cols + c] = dist;
        }
      }
    });
  });
}

void attach_classifier(ClusterwiseRegressor& regressor, const Dataset& dataset) {
  if (regressor.assignments.size() != dataset.size()) {
    throw Error(ErrorCode::InvalidArgument, "regressor assignments do not cover the dataset");
  }
  regressor.classifier = train_classifier(dataset, regressor.assignments,
                                          regressor.hyperparams.clf_feature_idx,
                                          regressor.hyperparams.classifier);
}

ClusterwiseRegressor fit_model(const Dataset& dataset, const Hyperparams& hp,
                               const FitOptions& options, bool augmented) {
  auto regressor = augmented ? fit_clusterwise_augmented(dataset, hp, options)
                             : fit_clusterwise(dataset, hp, options);
  attach_classifier(regressor, dataset);
  return regressor;
}

std::size_t assign_cluster(const ClusterwiseRegressor& regressor, const MeltSample& sample) {
  if (!regressor.classifier) throw Error(ErrorCode::ModelNotFitted, "regressor has no classifier");
  return std::min(regressor.classifier->assign(sample.features), regressor.clusters.size() - 1);
}

double predict(const ClusterwiseRegressor& regressor, std::span<const double> features) {
  if (!regressor.fitted()) throw Error(ErrorCode::ModelNotFitted, "regressor is not fitted");
  if (features.size() != regressor.schema.feature_names.size() && !regressor.schema.feature_names.empty()) {
    throw Error(ErrorCode::InvalidArgument, "sample has " + std::to_string(features.size()) +
                                                " features, model expects " +
                                                std::to_string(regressor.schema.feature_names.size()));
  }
  const std::size_t c =
      std::min(regressor.classifier->assign(features), regressor.clusters.size() - 1);
  return regressor.predict_in_cluster(c, features);
}

double predict(const ClusterwiseRegressor& regressor, const MeltSample& sample) {
  return predict(regressor, std::span<const double>(sample.features));
}

double total_sse(const ClusterwiseRegressor& regressor, const Dataset& dataset) {
  if (regressor.assignments.size() != dataset.size()) {
    throw Error(ErrorCode::InvalidArgument, "regressor assignments do not cover the dataset");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& s = dataset.samples[i];
    const double r = regressor.predict_in_cluster(regressor.assignments[i], s.features) - s.target;
    total += r * r;
  }
  return total;
}

}  // namespace ladle

#include "ladle/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ladle/error.hpp"
#include "ladle/random.hpp"
#include "ladle/split.hpp"
#include "parallel.hpp"

namespace ladle {

double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "percentile of empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::InvalidArgument, "percentile q outside [0,1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

EvalReport evaluate(const ClusterwiseRegressor& regressor, const Dataset& test) {
  if (test.empty()) throw Error(ErrorCode::EmptyTest, "test set is empty");
  if (!regressor.fitted()) throw Error(ErrorCode::ModelNotFitted, "regressor is not fitted");

  EvalReport report;
  report.n_test = test.size();
  report.per_cluster.resize(regressor.clusters.size());
  for (std::size_t c = 0; c < regressor.clusters.size(); ++c) {
    report.per_cluster[c].cluster_id = c;
    report.per_cluster[c].size = regressor.clusters[c].member_count;
  }

  std::vector<double> abs_errors;
  abs_errors.reserve(test.size());
  double baseline_total = 0.0;
  for (const auto& s : test.samples) {
    const std::size_t c = assign_cluster(regressor, s);
    const double err = std::abs(regressor.predict_in_cluster(c, s.features) - s.target);
    abs_errors.push_back(err);
    report.per_cluster[c].test_count += 1;
    report.per_cluster[c].cluster_mae += err;
    baseline_total += std::abs(regressor.baseline_predict(s.features) - s.target);
  }
  for (auto& pc : report.per_cluster) {
    if (pc.test_count > 0) pc.cluster_mae /= static_cast<double>(pc.test_count);
  }
  const auto n = static_cast<double>(test.size());
  report.mae = std::accumulate(abs_errors.begin(), abs_errors.end(), 0.0) / n;
  report.baseline_mae = baseline_total / n;
  report.median_abs_error = percentile(abs_errors, 0.5);
  report.p90_abs_error = percentile(abs_errors, 0.9);
  return report;
}

SearchSpace default_search_space(const Hyperparams& base) {
  SearchSpace space;
  for (std::size_t k = 2; k <= 30; ++k) space.n_clusters.push_back(k);
  space.min_cluster_size = {std::max<std::size_t>(50, 2 * base.lr_feature_idx.size())};
  space.convergence_threshold = {10};
  space.init_fraction = {0.5};
  return space;
}

TuneResult tune(const Dataset& dataset, const Hyperparams& base, const SearchSpace& space,
                const TuneOptions& options) {
  if (options.budget == 0) throw Error(ErrorCode::InvalidArgument, "tuning budget must be at least 1");
  if (space.n_clusters.empty() || space.min_cluster_size.empty() ||
      space.convergence_threshold.empty() || space.init_fraction.empty()) {
    throw Error(ErrorCode::InvalidArgument, "every search dimension needs at least one value");
  }
  const auto inner = split_by_time(dataset, options.inner_train_fraction);

  struct Point {
    std::size_t k, min_size, threshold;
    double fraction;
  };
  std::vector<Point> grid;
  for (auto k : space.n_clusters)
    for (auto min_size : space.min_cluster_size)
      for (auto threshold : space.convergence_threshold)
        for (auto fraction : space.init_fraction) grid.push_back({k, min_size, threshold, fraction});
  Rng rng(options.seed);
  rng.shuffle(std::span<Point>(grid));

  TuneResult result;
  result.trials.resize(options.budget);
  for (std::size_t t = 0; t < options.budget; ++t) {
    const auto& p = grid[t % grid.size()];
    Hyperparams hp = base;
    hp.n_clusters = p.k;
    hp.min_cluster_size = p.min_size;
    hp.convergence_threshold = p.threshold;
    hp.init_per_cluster = std::max<std::size_t>(
        1, static_cast<std::size_t>(p.fraction * static_cast<double>(inner.train.size()) /
                                    static_cast<double>(p.k)));
    hp.seed = options.seed + t;
    result.trials[t].index = t;
    result.trials[t].init_fraction = p.fraction;
    result.trials[t].hyperparams = hp;
  }

  detail::parallel_for(options.budget, options.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t t = b; t < e; ++t) {
      auto& trial = result.trials[t];
      try {
        const auto model = fit_model(inner.train, trial.hyperparams);
        trial.validation_mae = evaluate(model, inner.test).mae;
      } catch (const Error& err) {
        trial.validation_mae = std::numeric_limits<double>::infinity();
        trial.error = err.what();
      }
    }
  });

  for (std::size_t t = 1; t < result.trials.size(); ++t) {
    if (result.trials[t].validation_mae < result.trials[result.best_trial].validation_mae) {
      result.best_trial = t;
    }
  }
  const auto& winner = result.trials[result.best_trial];
  result.best = winner.hyperparams;
  // Returned settings are meant for a refit on the full dataset.
  result.best.init_per_cluster = std::max<std::size_t>(
      1, static_cast<std::size_t>(winner.init_fraction * static_cast<double>(dataset.size()) /
                                  static_cast<double>(result.best.n_clusters)));
  return result;
}

}  // namespace ladle

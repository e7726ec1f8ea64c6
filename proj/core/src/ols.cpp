#include "ladle/ols.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ladle/error.hpp"

namespace ladle {
namespace {

constexpr double kRidgeFactor = 1e-8;
constexpr int kMaxBoundedSweeps = 10000;

Eigen::VectorXd solve_unconstrained(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index p = x.cols();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() == p) return qr.solve(y);

  const Eigen::MatrixXd gram = x.transpose() * x;
  const double trace = gram.trace();
  if (trace <= 0.0) return Eigen::VectorXd::Zero(p);
  const double lambda = kRidgeFactor * trace / static_cast<double>(p);
  Eigen::MatrixXd regularized = gram;
  regularized.diagonal().array() += lambda;
  return regularized.ldlt().solve(x.transpose() * y);
}

// Projected coordinate descent for box-constrained least squares. The
// intercept column (if any) is last and never clipped.
void refine_with_bounds(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const std::vector<WeightBound>& bounds, Eigen::VectorXd& w) {
  const Eigen::Index p = x.cols();
  auto clip = [&](Eigen::Index j, double v) {
    if (static_cast<std::size_t>(j) >= bounds.size()) return v;
    return std::clamp(v, bounds[j].lower, bounds[j].upper);
  };
  for (Eigen::Index j = 0; j < p; ++j) w[j] = clip(j, w[j]);

  const Eigen::VectorXd col_norm2 = x.colwise().squaredNorm().transpose();
  Eigen::VectorXd residual = y - x * w;
  for (int sweep = 0; sweep < kMaxBoundedSweeps; ++sweep) {
    double max_step = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (col_norm2[j] <= 0.0) continue;
      const double updated = clip(j, w[j] + x.col(j).dot(residual) / col_norm2[j]);
      const double step = updated - w[j];
      if (step != 0.0) {
        residual -= step * x.col(j);
        w[j] = updated;
      }
      max_step = std::max(max_step, std::abs(step) / (1.0 + std::abs(w[j])));
    }
    if (max_step <= 1e-13) break;
  }
}

}  // namespace

DesignMatrix DesignMatrix::from_samples(std::span<const MeltSample> samples,
                                        std::span<const std::size_t> feature_idx,
                                        const FeatureScaling& scaling) {
  DesignMatrix design(samples.size(), feature_idx.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& features = samples[i].features;
    for (std::size_t j = 0; j < feature_idx.size(); ++j) {
      if (feature_idx[j] >= features.size()) {
        throw Error(ErrorCode::InvalidArgument,
                    "feature index " + std::to_string(feature_idx[j]) + " out of range");
      }
      design.at(i, j) = scaling.apply(j, features[feature_idx[j]]);
    }
    design.target(i) = samples[i].target;
  }
  return design;
}

ClusterModel fit_least_squares(const DesignMatrix& design, std::span<const std::size_t> rows,
                               const LeastSquaresOptions& options) {
  const std::size_t n_weights = design.cols();
  const std::size_t n_params = n_weights + (options.use_intercept ? 1 : 0);
  if (n_params == 0) {
    throw Error(ErrorCode::InvalidArgument, "regression has no parameters");
  }
  if (rows.size() < n_params) {
    throw Error(ErrorCode::DegenerateFit, "cluster has " + std::to_string(rows.size()) +
                                              " samples for " + std::to_string(n_params) +
                                              " parameters");
  }
  if (!options.bounds.empty() && options.bounds.size() != n_weights) {
    throw Error(ErrorCode::InvalidArgument, "weight bounds do not match feature count");
  }

  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd x(m, static_cast<Eigen::Index>(n_params));
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto r = design.row(rows[i]);
    for (std::size_t j = 0; j < n_weights; ++j) x(i, static_cast<Eigen::Index>(j)) = r[j];
    if (options.use_intercept) x(i, static_cast<Eigen::Index>(n_weights)) = 1.0;
    y[i] = design.target(rows[i]);
  }

  Eigen::VectorXd w = solve_unconstrained(x, y);
  if (!options.bounds.empty()) refine_with_bounds(x, y, options.bounds, w);

  ClusterModel model;
  model.weights.assign(w.data(), w.data() + n_weights);
  model.intercept = options.use_intercept ? w[static_cast<Eigen::Index>(n_weights)] : 0.0;
  model.member_count = rows.size();
  for (std::size_t row : rows) {
    const double residual = predict_linear(model, design.row(row)) - design.target(row);
    model.sse += residual * residual;
  }
  for (double v : model.weights) {
    if (!std::isfinite(v)) throw Error(ErrorCode::DegenerateFit, "non-finite regression weight");
  }
  return model;
}

ClusterModel fit_least_squares(const DesignMatrix& design, const LeastSquaresOptions& options) {
  std::vector<std::size_t> rows(design.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return fit_least_squares(design, rows, options);
}

ClusterModel fit_ols(std::span<const MeltSample> samples, std::span<const std::size_t> feature_idx,
                     bool use_intercept) {
  const auto design = DesignMatrix::from_samples(samples, feature_idx);
  return fit_least_squares(design, LeastSquaresOptions{.use_intercept = use_intercept, .bounds = {}});
}

double predict_linear(const ClusterModel& model, std::span<const double> x) noexcept {
  double value = model.intercept;
  for (std::size_t j = 0; j < model.weights.size(); ++j) value += model.weights[j] * x[j];
  return value;
}

double sample_error(const ClusterModel& model, const MeltSample& sample,
                    std::span<const std::size_t> feature_idx) {
  if (feature_idx.size() != model.weights.size()) {
    throw Error(ErrorCode::InvalidArgument, "feature view does not match model weights");
  }
  double value = model.intercept;
  for (std::size_t j = 0; j < feature_idx.size(); ++j) {
    value += model.weights[j] * sample.features.at(feature_idx[j]);
  }
  const double residual = value - sample.target;
  return residual * residual;
}

}  // namespace ladle

#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "ladle/sample.hpp"

namespace ladle {

/// Regression of one cluster. The weights and intercept are the process
/// coefficients an operator reads (e.g. the weight on the added element is
/// its recovery ratio).
struct ClusterModel {
  std::vector<double> weights;
  double intercept = 0.0;
  std::size_t member_count = 0;
  double sse = 0.0;
};

struct WeightBound {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

/// Per-column affine map x' = (x - mean) / scale applied to regression
/// features before fitting. Empty means identity.
struct FeatureScaling {
  std::vector<double> mean;
  std::vector<double> scale;

  bool enabled() const noexcept { return !scale.empty(); }
  double apply(std::size_t column, double value) const noexcept {
    return enabled() ? (value - mean[column]) / scale[column] : value;
  }
};

struct LeastSquaresOptions {
  bool use_intercept = false;
  // One bound per column, or empty for an unconstrained fit.
  std::vector<WeightBound> bounds;
};

/// Dense row-major matrix of regression inputs plus the target column.
class DesignMatrix {
 public:
  DesignMatrix() = default;
  DesignMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, 0.0), targets_(rows, 0.0) {}

  static DesignMatrix from_samples(std::span<const MeltSample> samples,
                                   std::span<const std::size_t> feature_idx,
                                   const FeatureScaling& scaling = {});

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<const double> row(std::size_t i) const noexcept {
    return {values_.data() + i * cols_, cols_};
  }
  double& at(std::size_t i, std::size_t j) noexcept { return values_[i * cols_ + j]; }
  double at(std::size_t i, std::size_t j) const noexcept { return values_[i * cols_ + j]; }
  double target(std::size_t i) const noexcept { return targets_[i]; }
  double& target(std::size_t i) noexcept { return targets_[i]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
  std::vector<double> targets_;
};

// Least-squares fit on a subset of design rows. Column-pivoted Householder QR;
// a rank-deficient design falls back to ridge with
// lambda = 1e-8 * trace(X^T X) / p. Throws DegenerateFit when there are
// fewer rows than parameters.
ClusterModel fit_least_squares(const DesignMatrix& design, std::span<const std::size_t> rows,
                               const LeastSquaresOptions& options);

ClusterModel fit_least_squares(const DesignMatrix& design, const LeastSquaresOptions& options);

ClusterModel fit_ols(std::span<const MeltSample> samples, std::span<const std::size_t> feature_idx,
                     bool use_intercept);

double predict_linear(const ClusterModel& model, std::span<const double> x) noexcept;

// Squared residual of the sample against the model on the given feature view.
double sample_error(const ClusterModel& model, const MeltSample& sample,
                    std::span<const std::size_t> feature_idx);

}  // namespace ladle

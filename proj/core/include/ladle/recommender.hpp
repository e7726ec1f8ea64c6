#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ladle/clusterwise.hpp"

namespace ladle {

struct Ferroalloy {
  std::string name;
  std::map<std::string, double> composition;  // element -> mass fraction in [0, 1]
  double price = 0.0;                          // per kg
  std::optional<double> max_dose;              // kg per heat
};

struct MeltState {
  double mass = 0.0;  // kg of liquid steel
  std::map<std::string, double> current_shares;     // element -> mass-percent
  std::map<std::string, double> context_features;  // feature name -> value
};

struct ShareBand {
  double min_share = 0.0;
  double max_share = 100.0;
};

// share(numerator) >= min_ratio * share(denominator)
struct RatioConstraint {
  std::string numerator;
  std::string denominator;
  double min_ratio = 0.0;
};

struct TargetSpec {
  std::map<std::string, ShareBand> elements;
  std::vector<RatioConstraint> ratios;
};

struct Recommendation {
  std::map<std::string, double> doses;             // alloy -> kg
  std::map<std::string, double> predicted_shares;  // element -> mass-percent
  double total_cost = 0.0;
  std::map<std::string, std::size_t> cluster_id;
  bool feasible = false;
  std::vector<std::string> active_constraints;
  std::vector<std::string> violated_constraints;
};

using ModelSet = std::map<std::string, ClusterwiseRegressor>;

/// Final share of one element as an affine function of alloy doses inside the
/// cluster the classifier picks for the melt: share(d) = base + coef . d.
struct ElementResponse {
  std::string element;
  std::size_t cluster_id = 0;
  double base_share = 0.0;
  double addition_weight = 0.0;  // raw weight on the addition feature
  std::vector<double> coef;      // per catalog alloy, share-points per kg
};

struct SharePrediction {
  double share = 0.0;
  double base_share = 0.0;
  std::size_t cluster_id = 0;
};

inline constexpr double kShareTolerance = 1e-6;

// Solves dot(weights, x) + intercept = target for x[free_index], the other
// entries of fixed_values held. Throws ZeroWeight when |weights[free_index]|
// <= 1e-12.
double solve_single(std::span<const double> weights, double intercept,
                    std::span<const double> fixed_values, std::size_t free_index, double target);

// Element share (mass-percent) the doses add to the melt before recovery.
double added_share(const std::string& element, std::span<const Ferroalloy> catalog,
                   std::span<const double> doses, double melt_mass);

// Model feature vector for a melt; the addition feature is set to
// added_share_points.
std::vector<double> melt_features(const ClusterwiseRegressor& model, const MeltState& melt,
                                  double added_share_points);

ElementResponse linearize(const ClusterwiseRegressor& model, const std::string& element,
                          const MeltState& melt, std::span<const Ferroalloy> catalog);

// Cost-minimizing doses that bring every targeted element into its band.
// An unreachable target gives feasible == false with violated_constraints
// filled; it is not an exception.
Recommendation recommend(const ModelSet& models, const MeltState& melt, const TargetSpec& targets,
                         std::span<const Ferroalloy> catalog);

// Full-model prediction for given doses (alloy name -> kg), one entry per
// element with a model.
std::map<std::string, SharePrediction> predict_shares(const ModelSet& models,
                                                      const MeltState& melt,
                                                      std::span<const Ferroalloy> catalog,
                                                      const std::map<std::string, double>& doses);

void validate_catalog(std::span<const Ferroalloy> catalog);
void validate_melt(const MeltState& melt);

}  // namespace ladle

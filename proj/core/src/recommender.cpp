#include "ladle/recommender.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ladle/error.hpp"
#include "ladle/simplex.hpp"

namespace ladle {
namespace {

constexpr double kZeroWeight = 1e-12;

std::string format_ratio(const RatioConstraint& r) {
  std::ostringstream os;
  os << "ratio:" << r.numerator << "/" << r.denominator << ">=" << r.min_ratio;
  return os.str();
}

const ClusterwiseRegressor& model_for(const ModelSet& models, const std::string& element) {
  const auto it = models.find(element);
  if (it == models.end()) {
    throw Error(ErrorCode::ModelNotFitted, "no model loaded for element '" + element + "'");
  }
  if (!it->second.fitted()) {
    throw Error(ErrorCode::ModelNotFitted, "model for element '" + element + "' is not fitted");
  }
  return it->second;
}

std::optional<std::size_t> addition_column(const ClusterwiseRegressor& model) {
  const auto& name = model.schema.addition_feature;
  if (name.empty()) return std::nullopt;
  const auto& names = model.schema.feature_names;
  const auto f = std::find(names.begin(), names.end(), name);
  if (f == names.end()) {
    throw Error(ErrorCode::InvalidArgument, "addition feature '" + name + "' not in model features");
  }
  const auto feature = static_cast<std::size_t>(f - names.begin());
  const auto& lr = model.hyperparams.lr_feature_idx;
  const auto pos = std::find(lr.begin(), lr.end(), feature);
  if (pos == lr.end()) return std::nullopt;
  return static_cast<std::size_t>(pos - lr.begin());
}

}  // namespace

double solve_single(std::span<const double> weights, double intercept,
                    std::span<const double> fixed_values, std::size_t free_index, double target) {
  if (weights.size() != fixed_values.size() || free_index >= weights.size()) {
    throw Error(ErrorCode::InvalidArgument, "solve_single: dimension mismatch");
  }
  if (std::abs(weights[free_index]) <= kZeroWeight) {
    throw Error(ErrorCode::ZeroWeight,
                "free variable has zero weight; the target does not respond to it");
  }
  double rest = intercept;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (k != free_index) rest += weights[k] * fixed_values[k];
  }
  return (target - rest) / weights[free_index];
}

double added_share(const std::string& element, std::span<const Ferroalloy> catalog,
                   std::span<const double> doses, double melt_mass) {
  double kg = 0.0;
  for (std::size_t a = 0; a < catalog.size(); ++a) {
    const auto it = catalog[a].composition.find(element);
    if (it != catalog[a].composition.end()) kg += it->second * doses[a];
  }
  return kg * 100.0 / melt_mass;
}

void validate_catalog(std::span<const Ferroalloy> catalog) {
  if (catalog.empty()) throw Error(ErrorCode::InvalidArgument, "ferroalloy catalog is empty");
  for (const auto& alloy : catalog) {
    double total = 0.0;
    for (const auto& [element, fraction] : alloy.composition) {
      if (!(fraction >= 0.0 && fraction <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument,
                    "alloy '" + alloy.name + "' has fraction outside [0,1] for " + element);
      }
      total += fraction;
    }
    if (total > 1.0 + 1e-9) {
      throw Error(ErrorCode::InvalidArgument, "alloy '" + alloy.name + "' fractions sum above 1");
    }
    if (!(alloy.price >= 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "alloy '" + alloy.name + "' has negative price");
    }
    if (alloy.max_dose && !(*alloy.max_dose >= 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "alloy '" + alloy.name + "' has negative max_dose");
    }
  }
}

void validate_melt(const MeltState& melt) {
  if (!(melt.mass > 0.0)) throw Error(ErrorCode::InvalidArgument, "melt mass must be positive");
  for (const auto& [element, share] : melt.current_shares) {
    if (!(share >= 0.0 && share <= 100.0)) {
      throw Error(ErrorCode::InvalidArgument, "share of " + element + " outside [0,100]");
    }
  }
}

std::vector<double> melt_features(const ClusterwiseRegressor& model, const MeltState& melt,
                                  double added_share_points) {
  const auto& names = model.schema.feature_names;
  std::vector<double> x(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == model.schema.addition_feature) {
      x[i] = added_share_points;
    } else if (auto c = melt.context_features.find(names[i]); c != melt.context_features.end()) {
      x[i] = c->second;
    } else if (auto s = melt.current_shares.find(names[i]); s != melt.current_shares.end()) {
      x[i] = s->second;
    } else {
      throw Error(ErrorCode::InvalidArgument, "melt state has no value for feature '" + names[i] + "'");
    }
  }
  return x;
}

ElementResponse linearize(const ClusterwiseRegressor& model, const std::string& element,
                          const MeltState& melt, std::span<const Ferroalloy> catalog) {
  if (!model.fitted()) throw Error(ErrorCode::ModelNotFitted, "model is not fitted");
  ElementResponse r;
  r.element = element;
  const auto x0 = melt_features(model, melt, 0.0);
  r.cluster_id = std::min(model.classifier->assign(x0), model.clusters.size() - 1);
  r.base_share = model.predict_in_cluster(r.cluster_id, x0);
  if (const auto col = addition_column(model)) {
    r.addition_weight = model.raw_coefficients(r.cluster_id).weights[*col];
  }
  r.coef.assign(catalog.size(), 0.0);
  for (std::size_t a = 0; a < catalog.size(); ++a) {
    const auto it = catalog[a].composition.find(element);
    if (it == catalog[a].composition.end()) continue;
    r.coef[a] = r.addition_weight * it->second * 100.0 / melt.mass;
  }
  return r;
}

Recommendation recommend(const ModelSet& models, const MeltState& melt, const TargetSpec& targets,
                         std::span<const Ferroalloy> catalog) {
  validate_melt(melt);
  validate_catalog(catalog);
  if (targets.elements.empty()) throw Error(ErrorCode::InvalidArgument, "no element targets given");
  for (const auto& [element, band] : targets.elements) {
    if (!(band.min_share <= band.max_share)) {
      throw Error(ErrorCode::InvalidArgument, "target for " + element + " has min above max");
    }
  }

  const std::size_t n = catalog.size();
  std::map<std::string, ElementResponse> responses;
  for (const auto& [element, band] : targets.elements) {
    auto response = linearize(model_for(models, element), element, melt, catalog);
    const bool in_band = response.base_share >= band.min_share - kShareTolerance &&
                         response.base_share <= band.max_share + kShareTolerance;
    if (!in_band && std::abs(response.addition_weight) <= kZeroWeight) {
      throw Error(ErrorCode::ZeroWeight, "cluster " + std::to_string(response.cluster_id) + " of " +
                                             element +
                                             " has zero weight on the addition; escalate to operator");
    }
    responses.emplace(element, std::move(response));
  }

  // Elements referenced only by ratio constraints: modeled if possible,
  // otherwise held at their current share.
  auto response_of = [&](const std::string& element) -> ElementResponse {
    if (auto it = responses.find(element); it != responses.end()) return it->second;
    if (models.count(element)) {
      auto r = linearize(model_for(models, element), element, melt, catalog);
      responses.emplace(element, r);
      return r;
    }
    const auto s = melt.current_shares.find(element);
    if (s == melt.current_shares.end()) {
      throw Error(ErrorCode::InvalidArgument, "ratio constraint references unknown element " + element);
    }
    ElementResponse r;
    r.element = element;
    r.base_share = s->second;
    r.coef.assign(n, 0.0);
    return r;
  };

  LinearProgram lp;
  std::vector<std::string> row_names;
  for (const auto& alloy : catalog) {
    lp.cost.push_back(alloy.price);
    lp.bounds.push_back({0.0, alloy.max_dose.value_or(std::numeric_limits<double>::infinity())});
  }
  auto add_row = [&](std::vector<double> a, double b, std::string name) {
    lp.a_ub.push_back(std::move(a));
    lp.b_ub.push_back(b);
    row_names.push_back(std::move(name));
  };
  for (const auto& [element, band] : targets.elements) {
    const auto& r = responses.at(element);
    std::vector<double> neg(n);
    for (std::size_t a = 0; a < n; ++a) neg[a] = -r.coef[a];
    add_row(neg, r.base_share - band.min_share, element + ".min");
    add_row(r.coef, band.max_share - r.base_share, element + ".max");
  }
  for (const auto& ratio : targets.ratios) {
    if (!(ratio.min_ratio >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ratio must be non-negative");
    const auto num = response_of(ratio.numerator);
    const auto den = response_of(ratio.denominator);
    std::vector<double> a(n);
    for (std::size_t j = 0; j < n; ++j) a[j] = -(num.coef[j] - ratio.min_ratio * den.coef[j]);
    add_row(a, num.base_share - ratio.min_ratio * den.base_share, format_ratio(ratio));
  }

  const auto solution = simplex_solve(lp);
  if (solution.status == LpStatus::Unbounded || solution.status == LpStatus::IterationLimit) {
    throw Error(ErrorCode::Infeasible,
                "linear program failed: " + std::string(to_string(solution.status)));
  }

  Recommendation rec;
  rec.feasible = solution.status == LpStatus::Optimal;
  for (std::size_t a = 0; a < n; ++a) {
    rec.doses[catalog[a].name] = solution.x[a];
    rec.total_cost += catalog[a].price * solution.x[a];
  }
  for (const auto& [element, r] : responses) {
    if (!models.count(element)) continue;
    double share = r.base_share;
    for (std::size_t a = 0; a < n; ++a) share += r.coef[a] * solution.x[a];
    rec.predicted_shares[element] = share;
    rec.cluster_id[element] = r.cluster_id;
  }
  for (std::size_t row = 0; row < row_names.size(); ++row) {
    const double excess = solution.row_excess[row];
    if (excess > kShareTolerance) {
      rec.violated_constraints.push_back(row_names[row]);
    } else if (rec.feasible && excess >= -kShareTolerance) {
      rec.active_constraints.push_back(row_names[row]);
    }
  }
  if (rec.feasible) {
    for (std::size_t a = 0; a < n; ++a) {
      if (catalog[a].max_dose && solution.x[a] >= *catalog[a].max_dose - 1e-9) {
        rec.active_constraints.push_back("dose:" + catalog[a].name + ".max");
      }
    }
  }
  return rec;
}

std::map<std::string, SharePrediction> predict_shares(const ModelSet& models,
                                                      const MeltState& melt,
                                                      std::span<const Ferroalloy> catalog,
                                                      const std::map<std::string, double>& doses) {
  validate_melt(melt);
  std::vector<double> dose_vector(catalog.size(), 0.0);
  for (const auto& [name, kg] : doses) {
    const auto it = std::find_if(catalog.begin(), catalog.end(),
                                 [&](const Ferroalloy& a) { return a.name == name; });
    if (it == catalog.end()) throw Error(ErrorCode::InvalidArgument, "unknown alloy '" + name + "'");
    if (!(kg >= 0.0)) throw Error(ErrorCode::InvalidArgument, "dose of '" + name + "' is negative");
    dose_vector[static_cast<std::size_t>(it - catalog.begin())] = kg;
  }

  std::map<std::string, SharePrediction> out;
  for (const auto& [element, model] : models) {
    if (!model.fitted()) throw Error(ErrorCode::ModelNotFitted, "model for " + element + " is not fitted");
    const auto x0 = melt_features(model, melt, 0.0);
    const auto x = melt_features(model, melt, added_share(element, catalog, dose_vector, melt.mass));
    SharePrediction p;
    // The regime is decided from the pre-addition state, as in recommend().
    p.cluster_id = std::min(model.classifier->assign(x0), model.clusters.size() - 1);
    p.base_share = model.predict_in_cluster(p.cluster_id, x0);
    p.share = model.predict_in_cluster(p.cluster_id, x);
    out.emplace(element, p);
  }
  return out;
}

}  // namespace ladle

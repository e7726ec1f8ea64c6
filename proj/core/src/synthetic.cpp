#include "ladle/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ladle/error.hpp"
#include "ladle/random.hpp"

namespace ladle {

void SyntheticSpec::validate() const {
  auto invalid = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  if (features.empty()) invalid("synthetic spec needs at least one feature");
  if (models.empty()) invalid("synthetic spec needs at least one planted model");
  if (region_feature >= features.size()) invalid("region_feature out of range");
  if (!(noise_sigma >= 0.0)) invalid("noise_sigma must be non-negative");
  if (samples_per_timestamp == 0) invalid("samples_per_timestamp must be positive");
  for (const auto& f : features) {
    if (!(f.lower <= f.upper)) invalid("feature '" + f.name + "' has lower > upper");
  }
  for (const auto& m : models) {
    if (m.weights.size() != features.size()) invalid("planted weights must cover every feature");
  }
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticData out;
  out.dataset.element = spec.element;
  for (const auto& f : spec.features) out.dataset.feature_names.push_back(f.name);
  out.dataset.samples.reserve(spec.n_samples);
  out.labels.reserve(spec.n_samples);

  const auto& region = spec.features[spec.region_feature];
  const double width = (region.upper - region.lower) / static_cast<double>(spec.models.size());
  Rng rng(spec.seed);
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    MeltSample s;
    s.melt_id = "m" + std::to_string(i);
    s.timestamp = static_cast<std::int64_t>(i / spec.samples_per_timestamp);
    s.features.resize(spec.features.size());
    for (std::size_t j = 0; j < spec.features.size(); ++j) {
      s.features[j] = rng.uniform(spec.features[j].lower, spec.features[j].upper);
    }
    std::size_t label = 0;
    if (width > 0.0) {
      const double slab = std::floor((s.features[spec.region_feature] - region.lower) / width);
      label = static_cast<std::size_t>(
          std::clamp(slab, 0.0, static_cast<double>(spec.models.size() - 1)));
    }
    const auto& model = spec.models[label];
    double y = model.intercept;
    for (std::size_t j = 0; j < s.features.size(); ++j) y += model.weights[j] * s.features[j];
    // Always draw so the feature stream does not depend on sigma.
    const double noise = rng.normal();
    s.target = y + spec.noise_sigma * noise;
    out.dataset.samples.push_back(std::move(s));
    out.labels.push_back(label);
  }
  return out;
}

}  // namespace ladle

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ladle/sample.hpp"

namespace ladle {

struct FeatureRange {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
};

struct PlantedModel {
  std::vector<double> weights;  // one per feature, zeros for unused ones
  double intercept = 0.0;
};

/// Planted clusterwise-linear data. The range of region_feature is cut into
/// equal slabs, slab m is governed by models[m]; every feature is drawn
/// uniformly from its range.
struct SyntheticSpec {
  std::string element = "X";
  std::vector<FeatureRange> features;
  std::vector<PlantedModel> models;
  std::size_t region_feature = 0;
  double noise_sigma = 0.0;
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;
  // Consecutive samples sharing one timestamp (e.g. samples per month).
  std::size_t samples_per_timestamp = 1;

  void validate() const;
};

struct SyntheticData {
  Dataset dataset;
  std::vector<std::size_t> labels;  // planted model per sample
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace ladle

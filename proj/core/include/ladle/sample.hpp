#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ladle {

/// One observation of a refining stage: the measured state before the
/// addition, the addition itself and the element share measured afterwards.
struct MeltSample {
  std::string melt_id;
  std::int64_t timestamp = 0;
  std::vector<double> features;
  double target = 0.0;
};

struct Dataset {
  std::vector<MeltSample> samples;
  std::vector<std::string> feature_names;
  std::string element;
  bool has_timestamps = true;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  std::size_t dimension() const noexcept { return feature_names.size(); }

  std::optional<std::size_t> feature_index(const std::string& name) const;

  // Copy of the dataset restricted to the given sample indices, in order.
  Dataset subset(std::span<const std::size_t> indices) const;
};

inline std::optional<std::size_t> Dataset::feature_index(const std::string& name) const {
  for (std::size_t i = 0; i < feature_names.size(); ++i) {
    if (feature_names[i] == name) return i;
  }
  return std::nullopt;
}

inline Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.feature_names = feature_names;
  out.element = element;
  out.has_timestamps = has_timestamps;
  out.samples.reserve(indices.size());
  for (std::size_t i : indices) out.samples.push_back(samples.at(i));
  return out;
}

}  // namespace ladle

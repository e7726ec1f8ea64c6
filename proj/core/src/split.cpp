#include "ladle/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ladle/error.hpp"
#include "ladle/random.hpp"

namespace ladle {
namespace {

constexpr std::size_t kStrata = 10;

void check_fraction(double f) {
  if (!(f >= 0.0 && f <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "train fraction must lie in [0, 1]");
  }
}

std::size_t rounded_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

TrainTest materialize(const Dataset& ds, const SplitIndices& idx) {
  return {ds.subset(idx.train), ds.subset(idx.test)};
}

}  // namespace

SplitIndices split_indices_by_time(const Dataset& ds, double train_fraction) {
  check_fraction(train_fraction);
  if (!ds.has_timestamps) throw Error(ErrorCode::MissingTimestamps, "dataset has no timestamp column");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ds.samples[a].timestamp < ds.samples[b].timestamp;
  });
  std::size_t cut = std::min(rounded_count(train_fraction, ds.size()), ds.size());
  while (cut > 0 && cut < order.size() &&
         ds.samples[order[cut]].timestamp == ds.samples[order[cut - 1]].timestamp) {
    ++cut;
  }
  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
  out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

SplitIndices split_indices_by_distribution(const Dataset& ds, double train_fraction,
                                           std::uint64_t seed) {
  check_fraction(train_fraction);
  const std::size_t n = ds.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ds.samples[a].target < ds.samples[b].target;
  });

  Rng rng(seed);
  SplitIndices out;
  for (std::size_t d = 0; d < kStrata; ++d) {
    const std::size_t begin = d * n / kStrata;
    const std::size_t end = (d + 1) * n / kStrata;
    std::vector<std::size_t> stratum(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
    rng.shuffle(std::span<std::size_t>(stratum));
    const std::size_t take = std::min(rounded_count(train_fraction, stratum.size()), stratum.size());
    out.train.insert(out.train.end(), stratum.begin(), stratum.begin() + static_cast<std::ptrdiff_t>(take));
    out.test.insert(out.test.end(), stratum.begin() + static_cast<std::ptrdiff_t>(take), stratum.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

TrainTest split_by_time(const Dataset& ds, double train_fraction) {
  return materialize(ds, split_indices_by_time(ds, train_fraction));
}

TrainTest split_by_distribution(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  return materialize(ds, split_indices_by_distribution(ds, train_fraction, seed));
}

}  // namespace ladle

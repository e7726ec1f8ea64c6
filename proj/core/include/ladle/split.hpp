#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ladle/sample.hpp"

namespace ladle {

/// Index partition of a dataset; both lists are ascending.
struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct TrainTest {
  Dataset train;
  Dataset test;
};

// Earliest round(fraction * n) samples by timestamp go to train. The cut is
// moved forward to the end of a run of equal timestamps, so one timestamp
// never straddles the two sets.
SplitIndices split_indices_by_time(const Dataset& ds, double train_fraction);

// Target-decile stratified random split: every decile sends
// round(fraction * decile size) samples to train.
SplitIndices split_indices_by_distribution(const Dataset& ds, double train_fraction,
                                           std::uint64_t seed);

TrainTest split_by_time(const Dataset& ds, double train_fraction);
TrainTest split_by_distribution(const Dataset& ds, double train_fraction, std::uint64_t seed);

}  // namespace ladle

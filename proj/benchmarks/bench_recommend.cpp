#include <benchmark/benchmark.h>

#include <string>

#include "ladle/random.hpp"
#include "ladle/simplex.hpp"

using namespace ladle;

namespace {

// Dense random LP with a feasible origin: min c.x s.t. A x <= b, x >= 0.
LinearProgram random_lp(std::size_t vars, std::size_t rows, std::uint64_t seed) {
  Rng rng(seed);
  LinearProgram lp;
  for (std::size_t j = 0; j < vars; ++j) lp.cost.push_back(-rng.uniform(0.1, 1.0));
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> row(vars);
    for (auto& a : row) a = rng.uniform(0.0, 1.0);
    lp.a_ub.push_back(std::move(row));
    lp.b_ub.push_back(rng.uniform(1.0, 10.0));
  }
  return lp;
}

void BM_Simplex(benchmark::State& state) {
  const auto lp = random_lp(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(simplex_solve(lp));
}
// Ladle-sized problems: a handful of alloys against two rows per element.
BENCHMARK(BM_Simplex)->Args({4, 8})->Args({12, 30})->Args({50, 100});

}  // namespace

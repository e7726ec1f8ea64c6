#include <benchmark/benchmark.h>

#include "ladle/classifier.hpp"
#include "ladle/clusterwise.hpp"
#include "ladle/synthetic.hpp"

using namespace ladle;

namespace {

SyntheticSpec planted(std::size_t n) {
  SyntheticSpec s;
  s.element = "Mn";
  s.features = {{"Mn", 0.2, 0.8}, {"Mn_added", 0.1, 0.8}, {"Si", 0.1, 0.4}, {"scrap", 0, 1}, {"oxidation", 0, 1}};
  s.models = {{{1.0, 0.95, 0, -0.1, 0}, 0}, {{0.8, 0.7, 0, 0, 0}, 0}, {{0.6, 0.45, 0.1, 0.1, 0}, 0}};
  s.region_feature = 4;
  s.noise_sigma = 0.002;
  s.n_samples = n;
  s.seed = 3;
  return s;
}

void BM_FitClusterwise(benchmark::State& state) {
  const auto data = generate_synthetic(planted(static_cast<std::size_t>(state.range(0))));
  auto hp = default_hyperparams({0, 1, 2, 3}, {4}, static_cast<std::size_t>(state.range(1)));
  const FitOptions options{static_cast<unsigned>(state.range(2))};
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_clusterwise(data.dataset, hp, options));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitClusterwise)
    ->Args({3000, 3, 1})
    ->Args({30000, 3, 1})
    ->Args({30000, 10, 1})
    ->Args({30000, 10, 4})
    ->Unit(benchmark::kMillisecond);

void BM_TrainClassifier(benchmark::State& state) {
  const auto data = generate_synthetic(planted(static_cast<std::size_t>(state.range(0))));
  const std::vector<std::size_t> clf{4, 3};
  ClassifierOptions options;
  options.kind = static_cast<ClassifierKind>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_classifier(data.dataset, data.labels, clf, options));
  }
}
BENCHMARK(BM_TrainClassifier)
    ->Args({3000, static_cast<int>(ClassifierKind::DecisionTree)})
    ->Args({30000, static_cast<int>(ClassifierKind::DecisionTree)})
    ->Args({30000, static_cast<int>(ClassifierKind::OneVsRestLogistic)})
    ->Unit(benchmark::kMillisecond);

}  // namespace

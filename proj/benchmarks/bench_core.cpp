#include <benchmark/benchmark.h>

#include <vector>

#include "leadlag/causality.hpp"
#include "leadlag/lag_select.hpp"
#include "leadlag/market_data.hpp"
#include "leadlag/rng.hpp"
#include "leadlag/synthetic.hpp"
#include "leadlag/volatility.hpp"

namespace {

leadlag::PriceSeries make_series(std::size_t bars, std::uint64_t seed) {
  leadlag::SyntheticSpec spec;
  spec.tickers = {"BENCH"};
  spec.bars = bars;
  spec.seed = seed;
  return leadlag::generate_synthetic_universe(spec)[0];
}

void BM_VolatilityEstimators(benchmark::State& state) {
  const auto series = make_series(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) {
    for (leadlag::VolEstimator e : leadlag::kAllEstimators) {
      benchmark::DoNotOptimize(leadlag::compute_vol_series(series, e, 20));
    }
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_VolatilityEstimators)->Range(256, 8192)->Complexity();

void BM_KnnAnomalyScores(benchmark::State& state) {
  const auto series = make_series(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(leadlag::knn_anomaly_scores(series, 5));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KnnAnomalyScores)->Range(256, 4096)->Complexity();

void BM_GrangerTest(benchmark::State& state) {
  const int lag = static_cast<int>(state.range(0));
  leadlag::Rng rng(7);
  std::vector<double> x(1000), y(1000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = leadlag::normal(rng);
    y[i] = leadlag::normal(rng);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(leadlag::granger_test(x, y, lag));
  }
}
BENCHMARK(BM_GrangerTest)->Arg(3)->Arg(12)->Arg(48);

void BM_TransferEntropy(benchmark::State& state) {
  leadlag::Rng rng(11);
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = leadlag::normal(rng);
    y[i] = leadlag::normal(rng);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(leadlag::transfer_entropy(x, y, 1, 6));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_TransferEntropy)->Range(1024, 16384)->Complexity();

void BM_DtwDistance(benchmark::State& state) {
  leadlag::Rng rng(13);
  std::vector<double> a(static_cast<std::size_t>(state.range(0)));
  std::vector<double> b(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = leadlag::normal(rng);
    b[i] = leadlag::normal(rng);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(leadlag::dtw_distance(a, b));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DtwDistance)->Range(64, 1024)->Complexity();

}  // namespace

BENCHMARK_MAIN();

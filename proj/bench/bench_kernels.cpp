// Serial against OpenMP paths of the parallel kernels.

#include <random>

#include <benchmark/benchmark.h>

#include "ssaam/backtest.hpp"
#include "ssaam/cpd.hpp"
#include "ssaam/sentiment.hpp"
#include "ssaam/synth.hpp"

using namespace ssaam;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::Serial : Exec::Parallel; }

std::vector<double> noise(std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  std::vector<double> y(n);
  for (auto& v : y) v = nd(rng);
  return y;
}

void BM_ClassifyAll(benchmark::State& state) {
  const auto pll = noise(static_cast<std::size_t>(state.range(1)));
  const auto q = sentiment::compute_quartiles(pll);
  std::vector<int> labels(pll.size());
  for (auto _ : state) {
    sentiment::classify_all(pll, q, labels, exec_of(state));
    benchmark::DoNotOptimize(labels.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_ClassifyAll)->ArgsProduct({{0, 1}, {10000, 1000000}});

void BM_BestSplit(benchmark::State& state) {
  const auto y = noise(static_cast<std::size_t>(state.range(1)));
  const cpd::L2Cost cost(y);
  cpd::Split s;
  for (auto _ : state) {
    cpd::best_split(cost, 0, y.size(), 2, s, exec_of(state));
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_BestSplit)->ArgsProduct({{0, 1}, {2000, 200000}});

void BM_Binseg(benchmark::State& state) {
  const auto y = noise(static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(cpd::binseg(y, 9, 2, exec_of(state)));
}
BENCHMARK(BM_Binseg)->ArgsProduct({{0, 1}, {1250, 50000}});

void BM_RunGrid(benchmark::State& state) {
  synth::DatasetOptions o;
  o.n_assets = 5;
  o.n_days = 500;
  const auto ds = synth::make_dataset(o);
  const backtest::GridInputs in{ds.prices, ds.sentiment, 252, 1.0, false};
  std::vector<backtest::StrategyConfig> configs;
  for (auto k : {backtest::StrategyKind::CpdEvarPlusPlus, backtest::StrategyKind::CpdEvarPlus})
    configs.push_back({k, 60, 5});
  for (auto k : {backtest::StrategyKind::Evar, backtest::StrategyKind::Cvar, backtest::StrategyKind::Mv})
    configs.push_back({k, 60, std::nullopt});
  for (auto _ : state) benchmark::DoNotOptimize(backtest::run_grid(in, configs, exec_of(state)));
}
BENCHMARK(BM_RunGrid)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

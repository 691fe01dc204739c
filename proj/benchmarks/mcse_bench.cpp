#include <vector>

#include <benchmark/benchmark.h>

#include "mcse/batch_means.hpp"
#include "mcse/gelman_rubin.hpp"
#include "mcse/geo_model.hpp"
#include "mcse/harness.hpp"
#include "mcse/quantiles.hpp"
#include "mcse/random.hpp"

namespace {

std::vector<double> ar1(std::size_t n, std::uint64_t stream) {
  mcse::RngStream rng(1, stream);
  std::vector<double> y(n);
  double x = 0.0;
  for (auto& v : y) v = x = 0.5 * x + rng.standard_normal();
  return y;
}

void BM_CbmVariance(benchmark::State& state) {
  const auto y = ar1(static_cast<std::size_t>(state.range(0)), 0);
  for (auto _ : state) benchmark::DoNotOptimize(mcse::cbm_variance(y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CbmVariance)->Range(1 << 10, 1 << 20);

void BM_CbmTrackerPush(benchmark::State& state) {
  const auto y = ar1(1 << 16, 1);
  for (auto _ : state) {
    mcse::CbmTracker tracker;
    for (double v : y) tracker.push(v);
    benchmark::DoNotOptimize(tracker.estimate());
  }
  state.SetItemsProcessed(state.iterations() * y.size());
}
BENCHMARK(BM_CbmTrackerPush);

void BM_Psrf(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  std::vector<mcse::ScalarTrace> chains;
  for (std::size_t j = 0; j < m; ++j) chains.emplace_back(ar1(5000, 10 + j));
  const mcse::MultiChainTrace multi(std::move(chains));
  for (auto _ : state) benchmark::DoNotOptimize(mcse::psrf(multi));
}
BENCHMARK(BM_Psrf)->Arg(2)->Arg(4);

void BM_StudentTQuantile(benchmark::State& state) {
  double df = 2.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mcse::student_t_quantile(0.975, df));
    df = df > 1000.0 ? 2.0 : df + 1.0;
  }
}
BENCHMARK(BM_StudentTQuantile);

void BM_FQuantile(benchmark::State& state) {
  double df2 = 3.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mcse::f_quantile(0.975, 1.0, df2));
    df2 = df2 > 1000.0 ? 3.0 : df2 + 1.5;
  }
}
BENCHMARK(BM_FQuantile);

void BM_GeoSamplerStep(benchmark::State& state) {
  const auto params = mcse::default_geo_design(static_cast<std::size_t>(state.range(0)), 7);
  const auto data = mcse::synth_geo_data(params);
  mcse::GeoSampler sampler(data, params.truth);
  mcse::RngStream rng(7, 1);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.step(rng));
}
BENCHMARK(BM_GeoSamplerStep)->Arg(20)->Arg(50);

}  // namespace

BENCHMARK_MAIN();

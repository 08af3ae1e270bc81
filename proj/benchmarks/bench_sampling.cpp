#include <benchmark/benchmark.h>

#include "lcat/csbm.hpp"
#include "lcat/transforms.hpp"

using namespace lcat;

static CsbmParams params_for(std::size_t n) {
  CsbmParams p;
  p.n = n;
  p.p = 0.5;
  p.q = 0.1;
  p.mu_norm = 1.0;
  p.seed = 1;
  return p;
}

static void BM_SampleCsbm(benchmark::State& state) {
  const auto p = params_for(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sample_csbm(p));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SampleCsbm)->RangeMultiplier(2)->Range(1000, 8000)->Unit(benchmark::kMillisecond)->Complexity();

static void BM_EdgeNoise(benchmark::State& state) {
  const CsbmSample s = sample_csbm(params_for(2000));
  const double p = 1.0 / static_cast<double>(state.range(0));
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(inject_edge_noise(s.graph, p, rng));
}
BENCHMARK(BM_EdgeNoise)->Arg(10)->Arg(1000)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_NeighborhoodMean(benchmark::State& state) {
  const CsbmSample s = sample_csbm(params_for(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(neighborhood_mean(s.graph, s.features, 1.0));
  state.counters["entries"] = static_cast<double>(s.graph.num_entries());
}
BENCHMARK(BM_NeighborhoodMean)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

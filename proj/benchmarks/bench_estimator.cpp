#include <map>

#include <benchmark/benchmark.h>

#include "lcat/ansatz.hpp"
#include "lcat/learned_synthetic.hpp"

using namespace lcat;

namespace {

const CsbmSample& sample(std::size_t n) {
  static std::map<std::size_t, CsbmSample> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    CsbmParams p;
    p.n = n;
    p.p = 0.5;
    p.q = 0.1;
    p.mu_norm = easy_regime_mu_norm(n, 0.1);
    p.seed = 2;
    it = cache.emplace(n, sample_csbm(p)).first;
  }
  return it->second;
}

}  // namespace

static void BM_Estimator(benchmark::State& state) {
  const auto& s = sample(static_cast<std::size_t>(state.range(0)));
  const auto kind = static_cast<EstimatorKind>(state.range(1));
  const auto mode = EstimatorMode::defaults(kind, s.params.p, s.params.q);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_and_classify(s, mode));
}
BENCHMARK(BM_Estimator)
    ->ArgsProduct({{2000, 8000}, {static_cast<long>(EstimatorKind::kGCN), static_cast<long>(EstimatorKind::kGAT),
                                  static_cast<long>(EstimatorKind::kCAT)}})
    ->Unit(benchmark::kMillisecond);

// One forward + backward of the fused learned-synthetic op.
static void BM_LearnedStep(benchmark::State& state) {
  const auto& s = sample(static_cast<std::size_t>(state.range(0)));
  LearnedSyntheticModel m(LearnedModelKind::kLCAT, s, LearnedSyntheticConfig{});
  for (auto _ : state) {
    ad::Tape t;
    benchmark::DoNotOptimize(t.backward(m.loss(t)));
  }
}
BENCHMARK(BM_LearnedStep)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

#include <benchmark/benchmark.h>

#include "lcat/csbm.hpp"
#include "lcat/model.hpp"

using namespace lcat;

namespace {

struct Fixture {
  Graph graph;
  Matrix x;
};

Fixture make(std::size_t n) {
  CsbmParams p;
  p.n = n;
  p.p = 0.02;
  p.q = 0.005;
  p.mu_norm = 1.0;
  p.seed = 4;
  CsbmSample s = sample_csbm(p);
  return {std::move(s.graph), std::move(s.features)};
}

}  // namespace

static void BM_LayerForward(benchmark::State& state) {
  const Fixture f = make(2000);
  Rng rng(5);
  LayerConfig c;
  c.kind = static_cast<LayerKind>(state.range(0));
  c.in_dim = f.x.cols();
  c.out_dim = 8;
  c.heads = c.kind == LayerKind::kGCN ? 1 : 4;
  LcatLayer layer(c, Initializer::glorot_uniform(), rng);
  for (auto _ : state) {
    ad::Tape t;
    benchmark::DoNotOptimize(layer.forward(t, f.graph, f.x).value());
  }
  state.SetLabel(std::string(to_string(c.kind)));
}
BENCHMARK(BM_LayerForward)->DenseRange(0, 6)->Unit(benchmark::kMillisecond);

static void BM_ModelForwardBackward(benchmark::State& state) {
  const Fixture f = make(2000);
  Rng rng(6);
  ModelSpec spec;
  spec.kind = static_cast<LayerKind>(state.range(0));
  spec.in_dim = f.x.cols();
  spec.out_dim = 3;
  auto model = build_model(spec, Initializer::glorot_uniform(), rng);
  std::vector<int> labels(f.graph.num_nodes());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 3);
  const std::vector<std::uint8_t> mask(labels.size(), 1);
  for (auto _ : state) {
    ad::Tape t;
    benchmark::DoNotOptimize(t.backward(ad::cross_entropy(model->forward(t, f.graph, f.x), labels, mask)));
  }
  state.SetLabel(std::string(to_string(spec.kind)));
}
BENCHMARK(BM_ModelForwardBackward)->DenseRange(0, 6)->Unit(benchmark::kMillisecond);

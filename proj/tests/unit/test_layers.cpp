#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "lcat/error.hpp"
#include "lcat/gradcheck.hpp"
#include "lcat/layers.hpp"
#include "test_support.hpp"

using namespace lcat;

namespace {

constexpr LayerKind kAllKinds[] = {LayerKind::kGCN,   LayerKind::kGAT,  LayerKind::kGATv2, LayerKind::kCAT,
                                   LayerKind::kCATv2, LayerKind::kLCAT, LayerKind::kLCATv2};

LayerConfig config(LayerKind kind, std::size_t in, std::size_t out, std::size_t heads,
                   HeadMerge merge = HeadMerge::kConcat) {
  LayerConfig c;
  c.kind = kind;
  c.in_dim = in;
  c.out_dim = out;
  c.heads = heads;
  c.merge = merge;
  return c;
}

void randomize_bias(LcatLayer& layer, Rng& rng) {
  for (double& v : layer.bias.value.data()) v = 0.1 * rng.normal();
}

double leaky(double x, double s) { return x > 0 ? x : s * x; }

// Per-row loop over every head, written without the tape.
struct LayerOracle {
  std::vector<std::vector<double>> gammas;
  Matrix out;
};

LayerOracle layer_oracle(LcatLayer& layer, const Graph& g, const Matrix& h) {
  const auto& cfg = layer.config();
  const auto [l1, l2] = layer.effective_lambdas();
  const std::size_t n = g.num_nodes(), d = cfg.out_dim;
  LayerOracle res;
  std::vector<Matrix> heads;
  for (std::size_t k = 0; k < cfg.heads; ++k) {
    const Matrix z = matmul(h, layer.W[k].value);
    Matrix zh(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t others = 0;
      std::vector<double> s(d, 0.0);
      for (NodeId j : g.neighbors(i)) {
        if (static_cast<std::size_t>(j) == i) continue;
        ++others;
        for (std::size_t c = 0; c < d; ++c) s[c] += z(j, c);
      }
      for (std::size_t c = 0; c < d; ++c) zh(i, c) = (z(i, c) + l2 * s[c]) / (1.0 + l2 * static_cast<double>(others));
    }
    const Matrix& av = layer.a[k].value;
    std::vector<double> gam;
    Matrix o(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> sc;
      for (NodeId j : g.neighbors(i)) {
        double psi = 0.0;
        if (cfg.kind == LayerKind::kGCN) {
          psi = 0.0;
        } else if (uses_v2_score(cfg.kind)) {
          for (std::size_t c = 0; c < d; ++c) psi += av(c, 0) * leaky(zh(i, c) + zh(j, c), cfg.leaky_slope);
        } else {
          double e = 0.0;
          for (std::size_t c = 0; c < d; ++c) e += av(c, 0) * zh(i, c) + av(d + c, 0) * zh(j, c);
          psi = leaky(e, cfg.leaky_slope);
        }
        sc.push_back(l1 * psi);
      }
      const double m = *std::max_element(sc.begin(), sc.end());
      double tot = 0.0;
      for (double& v : sc) tot += (v = std::exp(v - m));
      std::size_t t = 0;
      for (NodeId j : g.neighbors(i)) {
        const double w = sc[t++] / tot;
        gam.push_back(w);
        for (std::size_t c = 0; c < d; ++c) o(i, c) += w * z(j, c);
      }
    }
    res.gammas.push_back(gam);
    heads.push_back(o);
  }
  const std::size_t width = layer.output_dim();
  res.out = Matrix(n, width);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < cfg.heads; ++k)
      for (std::size_t c = 0; c < d; ++c) {
        if (cfg.merge == HeadMerge::kConcat) res.out(i, k * d + c) = heads[k](i, c);
        else res.out(i, c) += heads[k](i, c) / static_cast<double>(cfg.heads);
      }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < width; ++c) res.out(i, c) += layer.bias.value(0, c);
  return res;
}

Matrix forward_value(LcatLayer& layer, const Graph& g, const Matrix& h) {
  ad::Tape t;
  return layer.forward(t, g, h).value();
}

double row_entropy(std::span<const double> p) {
  double e = 0.0;
  for (double v : p)
    if (v > 0) e -= v * std::log(v);
  return e;
}

}  // namespace

TEST(LayerKinds, NamesRoundTrip) {
  for (auto k : kAllKinds) EXPECT_EQ(parse_layer_kind(to_string(k)), k);
  EXPECT_EQ(parse_layer_kind("L-CAT"), LayerKind::kLCAT);
  EXPECT_THROW((void)parse_layer_kind("SAGE"), ConfigError);
}

TEST(EffectiveLambdas, SigmoidOfTenX) {
  Rng rng(0);
  LcatLayer layer(config(LayerKind::kLCAT, 3, 2, 1), Initializer::glorot_uniform(), rng);
  EXPECT_EQ(layer.effective_lambdas(), (std::pair{0.5, 0.5}));
  layer.x1.value = Matrix::scalar(1.0);
  EXPECT_NEAR(layer.effective_lambdas().first, 1.0 / (1.0 + std::exp(-10.0)), 1e-15);
  EXPECT_NEAR(layer.effective_lambdas().first, 0.9999546, 1e-7);
}

TEST(EffectiveLambdas, PinnedKindsReturnExactConstants) {
  Rng rng(0);
  const std::pair<double, double> expected[] = {{0, 1}, {1, 0}, {1, 0}, {1, 1}, {1, 1}};
  for (int k = 0; k < 5; ++k) {
    LcatLayer layer(config(kAllKinds[k], 3, 2, 1), Initializer::glorot_uniform(), rng);
    layer.x1.value = Matrix::scalar(0.3);  // ignored by pinned kinds
    EXPECT_EQ(layer.effective_lambdas(), expected[k]) << to_string(kAllKinds[k]);
  }
}

TEST(LayerForward, GcnEqualsDenseNormalizedAdjacency) {
  Rng rng(1);
  const std::size_t n = 30;
  const Graph g = fx::random_graph(n, 0.2, rng);
  const Matrix h = fx::random_matrix(n, 5, rng);
  LcatLayer layer(config(LayerKind::kGCN, 5, 4, 1), Initializer::glorot_uniform(), rng);
  const auto a = fx::dense_adjacency(g);
  const Matrix hw = matmul(h, layer.W[0].value);
  Matrix ref(n, 4);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 4; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a[i][j] * hw(j, c);
      ref(i, c) = s / static_cast<double>(g.degree(i));
    }
  EXPECT_LT(max_abs_diff(forward_value(layer, g, h), ref), 1e-12);
  for (const auto& gam : layer.attention_coefficients(g, h))
    for (std::size_t i = 0; i < n; ++i)
      for (auto e = g.row_offsets()[i]; e < g.row_offsets()[i + 1]; ++e)
        EXPECT_DOUBLE_EQ(gam[e], 1.0 / static_cast<double>(g.degree(i)));
}

// Standard attention on a 5-node fixture, unrolled by hand: scores
// LeakyReLU(a_l . Wh_i + a_r . Wh_j), softmax over N*_i, weighted sum of Wh_j.
TEST(LayerForward, GatMatchesHandUnrolledFiveNodeLayer) {
  const std::vector<Edge> edges{{0, 1}, {0, 2}, {1, 3}, {3, 4}};
  const Graph g = Graph::from_edge_list(edges, 5);
  const Matrix h = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}, {-1.0, 0.5}, {0.2, -0.3}});
  Rng rng(2);
  LcatLayer layer(config(LayerKind::kGAT, 2, 1, 1), Initializer::glorot_uniform(), rng);
  layer.W[0].value = Matrix::from_rows({{2.0}, {-1.0}});
  layer.a[0].value = Matrix::from_rows({{0.5}, {1.5}});
  // Wh = [2, -1, 1, -2.5, 0.7]
  const double wh[5] = {2.0, -1.0, 1.0, -2.5, 0.7};
  auto e = [&](int i, int j) { return leaky(0.5 * wh[i] + 1.5 * wh[j], 0.2); };
  auto node = [&](int i, std::vector<int> nb) {
    double z = 0.0, s = 0.0;
    for (int j : nb) z += std::exp(e(i, j));
    for (int j : nb) s += std::exp(e(i, j)) / z * wh[j];
    return s;
  };
  const double expected[5] = {node(0, {0, 1, 2}), node(1, {0, 1, 3}), node(2, {0, 2}), node(3, {1, 3, 4}),
                              node(4, {3, 4})};
  const Matrix out = forward_value(layer, g, h);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(out(i, 0), expected[i], 1e-14) << i;
}

TEST(LayerForward, AllKindsMatchPerRowOracle) {
  for (auto kind : kAllKinds)
    for (auto merge : {HeadMerge::kConcat, HeadMerge::kAverage}) {
      Rng rng(3);
      const Graph g = fx::random_graph(18, 0.25, rng);
      const Matrix h = fx::random_matrix(18, 6, rng);
      LayerConfig cfg = config(kind, 6, 4, 3, merge);
      cfg.lambda1_x = 0.07;
      cfg.lambda2_x = -0.04;
      LcatLayer layer(cfg, Initializer::glorot_normal(1.4), rng);
      randomize_bias(layer, rng);
      const auto ref = layer_oracle(layer, g, h);
      EXPECT_LT(max_abs_diff(forward_value(layer, g, h), ref.out), 1e-12) << to_string(kind);
      const auto gam = layer.attention_coefficients(g, h);
      ASSERT_EQ(gam.size(), 3u);
      for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t e = 0; e < gam[k].size(); ++e) ASSERT_NEAR(gam[k][e], ref.gammas[k][e], 1e-13);
    }
}

TEST(LayerForward, FourConcatenatedHeadsOfEightGiveWidth32) {
  Rng rng(4);
  const Graph g = fx::random_graph(10, 0.3, rng);
  LcatLayer layer(config(LayerKind::kCAT, 5, 8, 4), Initializer::glorot_uniform(), rng);
  EXPECT_EQ(layer.output_dim(), 32u);
  EXPECT_EQ(forward_value(layer, g, fx::random_matrix(10, 5, rng)).cols(), 32u);
  LcatLayer avg(config(LayerKind::kCAT, 5, 8, 4, HeadMerge::kAverage), Initializer::glorot_uniform(), rng);
  EXPECT_EQ(avg.output_dim(), 8u);
}

TEST(LayerForward, CatV2OnEqualFeaturesIsUniform) {
  Rng rng(5);
  const Graph g = fx::random_graph(12, 0.3, rng);
  LcatLayer layer(config(LayerKind::kCATv2, 3, 4, 2), Initializer::glorot_uniform(), rng);
  for (const auto& gam : layer.attention_coefficients(g, Matrix(12, 3, 0.4)))
    for (std::size_t i = 0; i < 12; ++i)
      for (auto e = g.row_offsets()[i]; e < g.row_offsets()[i + 1]; ++e)
        EXPECT_NEAR(gam[e], 1.0 / static_cast<double>(g.degree(i)), 1e-15);
}

TEST(LayerForward, RejectsBadInputs) {
  Rng rng(6);
  const Graph g = fx::random_graph(5, 0.5, rng);
  LcatLayer layer(config(LayerKind::kGAT, 3, 2, 1), Initializer::glorot_uniform(), rng);
  ad::Tape t;
  EXPECT_THROW((void)layer.forward(t, g, Matrix(5, 4)), ShapeError);
  EXPECT_THROW((void)layer.forward(t, g, Matrix(6, 3)), ShapeError);
  const Graph bare = Graph::from_edge_list({}, 5, {.symmetrize = true, .add_self_loops = false});
  EXPECT_THROW((void)layer.forward(t, bare, Matrix(5, 3)), GraphError);
}

TEST(AttentionCoefficients, IsolatedNodeAndZeroLambdaOne) {
  const std::vector<Edge> edges{{0, 1}, {1, 2}};
  const Graph g = Graph::from_edge_list(edges, 4);
  Rng rng(7);
  const Matrix h = fx::random_matrix(4, 3, rng);
  for (auto kind : kAllKinds) {
    LcatLayer layer(config(kind, 3, 2, 3), Initializer::glorot_uniform(), rng);
    for (const auto& gam : layer.attention_coefficients(g, h)) EXPECT_DOUBLE_EQ(gam.back(), 1.0);
    layer.force_lambdas(0.0, std::nullopt);
    for (const auto& gam : layer.attention_coefficients(g, h))
      for (std::size_t i = 0; i < 4; ++i)
        for (auto e = g.row_offsets()[i]; e < g.row_offsets()[i + 1]; ++e)
          EXPECT_DOUBLE_EQ(gam[e], 1.0 / static_cast<double>(g.degree(i)));
  }
}

TEST(LayerProperty, RowsStochasticForAllKindsAndHeads) {
  for (std::uint64_t seed = 0; seed < 5; ++seed)
    for (auto kind : kAllKinds) {
      Rng rng(seed);
      const Graph g = fx::random_graph(20, 0.3, rng);
      LcatLayer layer(config(kind, 4, 3, 4), Initializer::glorot_normal(3.0), rng);
      for (const auto& gam : layer.attention_coefficients(g, fx::random_matrix(20, 4, rng, 5.0)))
        for (std::size_t i = 0; i < 20; ++i) {
          double s = 0.0;
          for (auto e = g.row_offsets()[i]; e < g.row_offsets()[i + 1]; ++e) s += gam[e];
          ASSERT_NEAR(s, 1.0, 1e-9);
        }
    }
}

TEST(LayerProperty, PermutationEquivariance) {
  for (auto kind : kAllKinds) {
    Rng rng(8);
    const std::size_t n = 16;
    const Graph g = fx::random_graph(n, 0.3, rng);
    const Matrix h = fx::random_matrix(n, 4, rng);
    LcatLayer layer(config(kind, 4, 3, 2), Initializer::glorot_uniform(), rng);
    randomize_bias(layer, rng);
    std::vector<NodeId> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    Matrix hp(n, 4);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < 4; ++c) hp(perm[i], c) = h(i, c);
    const Matrix out = forward_value(layer, g, h);
    const Matrix outp = forward_value(layer, g.permuted(perm), hp);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < out.cols(); ++c) worst = std::max(worst, std::abs(outp(perm[i], c) - out(i, c)));
    EXPECT_LT(worst, 1e-10) << to_string(kind);
  }
}

TEST(LayerProperty, EntropyNonIncreasingInLambdaOne) {
  Rng rng(9);
  const Graph g = fx::random_graph(15, 0.4, rng);
  const Matrix h = fx::random_matrix(15, 4, rng);
  for (auto kind : {LayerKind::kLCAT, LayerKind::kLCATv2}) {
    LcatLayer layer(config(kind, 4, 3, 1), Initializer::glorot_normal(2.0), rng);
    std::vector<double> prev(15, std::numeric_limits<double>::infinity());
    for (double l1 : {0.0, 0.1, 0.25, 0.5, 0.75, 1.0, 2.0, 5.0}) {
      layer.force_lambdas(l1, 0.3);
      const auto gam = layer.attention_coefficients(g, h)[0];
      for (std::size_t i = 0; i < 15; ++i) {
        const auto lo = static_cast<std::size_t>(g.row_offsets()[i]);
        const double e = row_entropy(std::span<const double>(gam).subspan(lo, g.degree(i)));
        EXPECT_LE(e, prev[i] + 1e-12);
        prev[i] = e;
      }
    }
  }
}

TEST(LayerGradients, EveryKindPassesFiniteDifferences) {
  for (auto kind : kAllKinds) {
    Rng rng(10);
    const Graph g = fx::random_graph(10, 0.35, rng);
    const Matrix h = fx::random_matrix(10, 3, rng);
    LayerConfig cfg = config(kind, 3, 2, 2);
    cfg.lambda1_x = 0.05;
    cfg.lambda2_x = -0.03;
    LcatLayer layer(cfg, Initializer::glorot_uniform(), rng);
    randomize_bias(layer, rng);
    const Matrix target = fx::random_matrix(10, 4, rng);
    const auto f = [&](ad::Tape& t) {
      const auto out = layer.forward(t, g, h);
      return ad::mean(ad::hadamard(out, t.constant(target)));
    };
    const auto r = ad::finite_difference_check(f, layer.parameters());
    EXPECT_LT(r.max_rel_error, 1e-4) << to_string(kind) << " " << r.worst;
    EXPECT_GT(r.checked, 0u);
  }
}

TEST(LayerGradients, LambdaFreeParametersOfLcat) {
  Rng rng(11);
  const Graph g = fx::random_graph(10, 0.4, rng);
  const Matrix h = fx::random_matrix(10, 3, rng);
  LcatLayer layer(config(LayerKind::kLCAT, 3, 4, 1), Initializer::glorot_normal(2.0), rng);
  const auto f = [&](ad::Tape& t) { return ad::sum(ad::sigmoid(layer.forward(t, g, h))); };
  std::vector<ad::Parameter*> xs{&layer.x1, &layer.x2};
  const auto r = ad::finite_difference_check(f, xs);
  EXPECT_EQ(r.checked, 2u);
  EXPECT_LT(r.max_rel_error, 1e-4);
  ad::Tape t;
  const auto grads = t.backward(f(t));
  EXPECT_NE(grads.of(layer.x1).item(), 0.0);
  EXPECT_NE(grads.of(layer.x2).item(), 0.0);
}

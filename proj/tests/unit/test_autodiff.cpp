#include <cmath>
#include <memory>
#include <vector>

#include <gtest/gtest.h>

#include "lcat/ansatz.hpp"
#include "lcat/autodiff.hpp"
#include "lcat/csbm.hpp"
#include "lcat/error.hpp"
#include "lcat/gradcheck.hpp"
#include "lcat/learned_synthetic.hpp"
#include "test_support.hpp"

using namespace lcat;
using ad::Parameter;
using ad::Tape;
using ad::Tensor;

namespace {

ad::FdCheckResult fd(const ad::LossBuilder& f, std::vector<Parameter*> params, double step = 1e-5) {
  return ad::finite_difference_check(f, params, step);
}

Parameter random_param(const char* name, std::size_t r, std::size_t c, Rng& rng) {
  return Parameter{name, fx::random_matrix(r, c, rng)};
}

}  // namespace

TEST(Primitives, LeakyReluValueAndSlope) {
  Parameter x{"x", Matrix::scalar(-2.0)};
  Tape t;
  const Tensor y = ad::leaky_relu(t.parameter(x), 0.2);
  EXPECT_DOUBLE_EQ(y.value().item(), -0.4);
  EXPECT_DOUBLE_EQ(t.backward(y).of(x).item(), 0.2);
}

TEST(Primitives, LeakyReluDerivativeAtZeroIsSlope) {
  Parameter x{"x", Matrix::scalar(0.0)};
  Tape t;
  const Tensor y = ad::leaky_relu(t.parameter(x), 0.01);
  EXPECT_EQ(y.value().item(), 0.0);
  EXPECT_DOUBLE_EQ(t.backward(y).of(x).item(), 0.01);
}

TEST(Primitives, MatmulMatchesTripleLoop) {
  Rng rng(1);
  const Matrix a = fx::random_matrix(3, 4, rng), b = fx::random_matrix(4, 2, rng);
  Matrix ref(3, 2);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t k = 0; k < 4; ++k) ref(i, j) += a(i, k) * b(k, j);
  EXPECT_LT(max_abs_diff(matmul(a, b), ref), 1e-15);
  Tape t;
  EXPECT_LT(max_abs_diff(ad::matmul(t.constant(a), t.constant(b)).value(), ref), 1e-15);
}

TEST(Primitives, SegmentSoftmaxOfEqualScoresIsUniform) {
  Rng rng(2);
  const Graph g = fx::random_graph(15, 0.3, rng);
  Tape t;
  const Tensor s = ad::segment_softmax(t.constant(Matrix(g.num_entries(), 2, 1.7)), g);
  for (std::size_t i = 0; i < g.num_nodes(); ++i)
    for (auto e = g.row_offsets()[i]; e < g.row_offsets()[i + 1]; ++e)
      for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(s.value()(e, c), 1.0 / g.degree(i), 1e-15);
}

TEST(Primitives, ShapeMismatchNamesOpAndShapes) {
  Tape t;
  try {
    (void)ad::matmul(t.constant(Matrix(2, 3)), t.constant(Matrix(2, 3)));
    FAIL();
  } catch (const ShapeError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("matmul"), std::string::npos);
    EXPECT_NE(m.find("2x3"), std::string::npos) << m;
  }
  EXPECT_THROW((void)ad::add(t.constant(Matrix(2, 2)), t.constant(Matrix(2, 3))), ShapeError);
}

TEST(Backward, SigmoidAtZero) {
  Parameter x{"x", Matrix::scalar(0.0)};
  Tape t;
  EXPECT_DOUBLE_EQ(t.backward(ad::sigmoid(t.parameter(x))).of(x).item(), 0.25);
}

TEST(Backward, SumOfLinearMapGivesOuterStructure) {
  Rng rng(3);
  Parameter w = random_param("W", 2, 3, rng);
  const Matrix h = fx::random_matrix(3, 1, rng);
  Tape t;
  const auto g = t.backward(ad::sum(ad::matmul(t.parameter(w), t.constant(h))));
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(g.of(w)(r, c), h(c, 0));
}

TEST(Backward, NonParticipatingParameterGetsZero) {
  Parameter a{"a", Matrix::scalar(2.0)}, b{"b", Matrix(2, 2, 1.0)};
  Tape t;
  (void)t.parameter(b);
  const auto g = t.backward(ad::scale(t.parameter(a), 3.0));
  ASSERT_TRUE(g.contains(b));
  EXPECT_EQ(g.of(b), Matrix(2, 2, 0.0));
  EXPECT_DOUBLE_EQ(g.of(a).item(), 3.0);
}

TEST(Backward, NonScalarLossRejected) {
  Parameter a{"a", Matrix(2, 1, 1.0)};
  Tape t;
  EXPECT_THROW((void)t.backward(t.parameter(a)), ShapeError);
}

TEST(Backward, TapeIsSingleUse) {
  Parameter a{"a", Matrix::scalar(1.0)};
  Tape t;
  const Tensor l = ad::sum(t.parameter(a));
  (void)t.backward(l);
  EXPECT_TRUE(t.consumed());
  EXPECT_THROW((void)t.backward(l), RuntimeFailure);
  EXPECT_THROW((void)ad::scale(l, 2.0), RuntimeFailure);
}

TEST(Backward, FanOutOfThreeSumsBranches) {
  Rng rng(4);
  Parameter x = random_param("x", 4, 2, rng);
  const Matrix c = fx::random_matrix(4, 2, rng);
  Tape t;
  const Tensor xt = t.parameter(x);
  const Tensor l = ad::add(ad::add(ad::sum(ad::hadamard(xt, t.constant(c))), ad::sum(ad::scale(xt, 2.0))),
                           ad::sum(ad::sigmoid(xt)));
  const auto g = t.backward(l);
  for (std::size_t k = 0; k < x.value.size(); ++k) {
    const double s = 1.0 / (1.0 + std::exp(-x.value.data()[k]));
    EXPECT_NEAR(g.of(x).data()[k], c.data()[k] + 2.0 + s * (1 - s), 1e-15);
  }
}

TEST(SegmentSoftmaxProperty, BackwardMatchesDenseJacobian) {
  Rng rng(5);
  const Graph g = fx::random_graph(12, 0.5, rng);
  Parameter s = random_param("s", g.num_entries(), 1, rng);
  const Matrix up = fx::random_matrix(g.num_entries(), 1, rng);
  Tape t;
  const Tensor gam = ad::segment_softmax(t.parameter(s), g);
  const auto grads = t.backward(ad::sum(ad::hadamard(gam, t.constant(up))));
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const auto lo = static_cast<std::size_t>(g.row_offsets()[i]);
    const std::size_t m = g.degree(i);
    ASSERT_LE(m, 10u);
    // J = diag(gamma) - gamma gamma^T applied to the upstream vector.
    for (std::size_t a = 0; a < m; ++a) {
      double jv = 0.0;
      for (std::size_t b = 0; b < m; ++b) {
        const double ga = gam.value()(lo + a, 0), gb = gam.value()(lo + b, 0);
        jv += ((a == b ? ga : 0.0) - ga * gb) * up(lo + b, 0);
      }
      EXPECT_NEAR(grads.of(s)(lo + a, 0), jv, 1e-14);
    }
  }
}

TEST(SegmentSoftmaxProperty, ShiftInvariantAndStochasticForExtremeScores) {
  Rng rng(6);
  const Graph g = fx::random_graph(30, 0.3, rng);
  Matrix scores = fx::random_matrix(g.num_entries(), 1, rng, 300.0);
  Matrix shifted = scores;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const double c = 1000.0 * rng.normal();
    for (auto e = g.row_offsets()[i]; e < g.row_offsets()[i + 1]; ++e) shifted(e, 0) += c;
  }
  Tape t;
  const Matrix a = ad::segment_softmax(t.constant(scores), g).value();
  const Matrix b = ad::segment_softmax(t.constant(shifted), g).value();
  EXPECT_LT(max_abs_diff(a, b), 1e-12);
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    double total = 0.0;
    for (auto e = g.row_offsets()[i]; e < g.row_offsets()[i + 1]; ++e) total += a(e, 0);
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(FiniteDifference, SquareAtThree) {
  Parameter x{"x", Matrix::scalar(3.0)};
  Tape t;
  EXPECT_NEAR(t.backward(ad::hadamard(t.parameter(x), t.parameter(x))).of(x).item(), 6.0, 1e-15);
  const auto r = fd([&](Tape& tp) { return ad::hadamard(tp.parameter(x), tp.parameter(x)); }, {&x});
  EXPECT_EQ(r.checked, 1u);
  EXPECT_LT(r.max_rel_error, 1e-9);
}

TEST(FiniteDifference, CrossEntropyMatchesClosedForm) {
  Rng rng(7);
  Parameter z = random_param("z", 5, 3, rng);
  const std::vector<int> labels{0, 2, 1, 1, 0};
  const std::vector<std::uint8_t> mask{1, 1, 1, 0, 1};
  Tape t;
  const auto g = t.backward(ad::cross_entropy(t.parameter(z), labels, mask));
  for (std::size_t i = 0; i < 5; ++i) {
    double m = -1e300, s = 0.0;
    for (double v : z.value.row(i)) m = std::max(m, v);
    for (double v : z.value.row(i)) s += std::exp(v - m);
    for (std::size_t c = 0; c < 3; ++c) {
      const double p = std::exp(z.value(i, c) - m) / s;
      const double expected = mask[i] ? (p - (labels[i] == static_cast<int>(c))) / 4.0 : 0.0;
      EXPECT_NEAR(g.of(z)(i, c), expected, 1e-15);
    }
  }
  const auto r = fd([&](Tape& tp) { return ad::cross_entropy(tp.parameter(z), labels, mask); }, {&z});
  EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(FiniteDifference, KinkAtZeroIsExcluded) {
  Parameter x{"x", Matrix::from_rows({{0.0}, {1.0}})};
  const auto r = fd([&](Tape& tp) { return ad::sum(ad::leaky_relu(tp.parameter(x), 0.2)); }, {&x});
  EXPECT_EQ(r.excluded, 1u);
  EXPECT_EQ(r.checked, 1u);
  EXPECT_LT(r.max_rel_error, 1e-9);
}

TEST(FiniteDifference, NonFiniteLossRejected) {
  Parameter x{"x", Matrix::scalar(0.0)};
  EXPECT_THROW(
      (void)fd([&](Tape& tp) { return ad::scale(tp.parameter(x), std::numeric_limits<double>::infinity()); }, {&x}),
      RuntimeFailure);
}

// Every primitive's backward rule against central differences.
TEST(FiniteDifference, DensePrimitives) {
  Rng rng(8);
  Parameter a = random_param("a", 4, 3, rng), b = random_param("b", 3, 2, rng), c = random_param("c", 4, 3, rng);
  Parameter bias = random_param("bias", 1, 3, rng), s{"s", Matrix::scalar(0.7)}, slope{"slope", Matrix::scalar(0.25)};
  const auto f = [&](Tape& t) {
    const Tensor at = t.parameter(a), ct = t.parameter(c);
    const Tensor m = ad::matmul(ad::add_row_bias(ad::hadamard(at, ct), t.parameter(bias)), t.parameter(b));
    const std::vector<Tensor> parts{m, ad::scale_by(t.parameter(s), ad::slice_rows(at, 0, 4))};
    const Tensor cat = ad::concat_cols(parts);
    const std::vector<Tensor> avg{ad::slice_rows(cat, 1, 3), ad::sigmoid(ad::slice_rows(cat, 0, 3))};
    return ad::mean(ad::prelu(ad::average(avg), t.parameter(slope)));
  };
  const auto r = fd(f, {&a, &b, &c, &bias, &s, &slope});
  EXPECT_LT(r.max_rel_error, 1e-6) << r.worst;
  EXPECT_GT(r.checked, 30u);
}

TEST(FiniteDifference, GraphPrimitives) {
  Rng rng(9);
  const Graph g = fx::random_graph(10, 0.4, rng);
  const std::size_t E = g.num_entries();
  auto cols = std::make_shared<const std::vector<NodeId>>(g.col_indices().begin(), g.col_indices().end());
  Parameter h = random_param("h", 10, 3, rng), a = random_param("a", 3, 1, rng), w = random_param("w", E, 1, rng);
  Parameter lam{"lam", Matrix::scalar(0.4)};
  const auto f = [&](Tape& t) {
    const Tensor ht = ad::neighborhood_mean(g, t.parameter(h), t.parameter(lam));
    const Tensor sc = ad::pair_sum_scores(g, ht, t.parameter(a), 0.2);
    const Tensor gam = ad::segment_softmax(ad::add(sc, t.parameter(w)), g);
    const Tensor agg = ad::weighted_aggregate(g, gam, ht);
    const Tensor msg = ad::segment_sum(ad::row_scale(ad::gather_rows(ht, cols), gam), g);
    return ad::sum(ad::hadamard(agg, ad::sigmoid(msg)));
  };
  const auto r = fd(f, {&h, &a, &w, &lam});
  EXPECT_LT(r.max_rel_error, 1e-6) << r.worst;
  EXPECT_GT(r.checked, 20u);
}

TEST(FiniteDifference, BinaryCrossEntropy) {
  Rng rng(10);
  Parameter z = random_param("z", 6, 2, rng);
  const std::vector<double> targets{1, 0, 0, 1, 1, 1, 0, 0, 0.5, 0.5, 1, 0};
  const std::vector<std::uint8_t> mask{1, 1, 0, 1, 1, 1};
  const auto r = fd([&](Tape& t) { return ad::binary_cross_entropy(t.parameter(z), targets, mask); }, {&z});
  EXPECT_LT(r.max_rel_error, 1e-7);
}

class AnsatzAggregateGradient : public ::testing::TestWithParam<std::size_t> {};

TEST_P(AnsatzAggregateGradient, ScalarsPassFiniteDifferences) {
  CsbmParams p;
  p.n = GetParam();
  p.p = 0.4;
  p.q = 0.1;
  p.mu_norm = 2.0;
  p.seed = 12;
  const CsbmSample s = sample_csbm(p);
  std::vector<double> w(s.mu.size(), 1.0 / std::sqrt(static_cast<double>(s.mu.size())));
  ad::AnsatzAggregateSpec spec{s.graph, std::make_shared<const std::vector<double>>(project_rows(s.features, w)), 2.0,
                               3.5, 0.01};
  Parameter C{"C", Matrix::scalar(0.6)}, x1{"x1", Matrix::scalar(0.05)}, x2{"x2", Matrix::scalar(-0.1)};
  const auto f = [&](Tape& t) {
    const Tensor out = ad::ansatz_aggregate(t.parameter(C), ad::sigmoid(ad::scale(t.parameter(x1), 10.0)),
                                            ad::sigmoid(ad::scale(t.parameter(x2), 10.0)), spec);
    return ad::mean(ad::hadamard(out, out));
  };
  const auto r = fd(f, {&C, &x1, &x2});
  EXPECT_EQ(r.checked + r.excluded, 3u);
  EXPECT_GE(r.checked, 1u);
  EXPECT_LT(r.max_rel_error, 1e-6) << r.worst;
}

INSTANTIATE_TEST_SUITE_P(KernelPaths, AnsatzAggregateGradient, ::testing::Values(60, 1200));

TEST(FiniteDifference, LearnedSyntheticModelsAllKinds) {
  CsbmParams p;
  p.n = 300;
  p.p = 0.3;
  p.q = 0.1;
  p.mu_norm = 1.0;
  p.seed = 13;
  const CsbmSample s = sample_csbm(p);
  for (auto kind : {LearnedModelKind::kGCN, LearnedModelKind::kGAT, LearnedModelKind::kCAT, LearnedModelKind::kLCAT}) {
    LearnedSyntheticConfig cfg;
    cfg.initial_C = 0.8;
    cfg.initial_x1 = 0.03;
    cfg.initial_x2 = -0.02;
    LearnedSyntheticModel m(kind, s, cfg);
    const auto r = fd([&](Tape& t) { return m.loss(t); }, m.parameters());
    EXPECT_GE(r.checked, 1u) << to_string(kind);
    EXPECT_LT(r.max_rel_error, 1e-4) << to_string(kind) << " " << r.worst;
  }
}

#include "lcat/layers.hpp"

#include <cmath>
#include <string>

#include "lcat/error.hpp"

namespace lcat {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kGCN: return "GCN";
    case LayerKind::kGAT: return "GAT";
    case LayerKind::kGATv2: return "GATv2";
    case LayerKind::kCAT: return "CAT";
    case LayerKind::kCATv2: return "CATv2";
    case LayerKind::kLCAT: return "LCAT";
    case LayerKind::kLCATv2: return "LCATv2";
  }
  return "?";
}

LayerKind parse_layer_kind(std::string_view s) {
  if (s == "GCN") return LayerKind::kGCN;
  if (s == "GAT") return LayerKind::kGAT;
  if (s == "GATv2") return LayerKind::kGATv2;
  if (s == "CAT") return LayerKind::kCAT;
  if (s == "CATv2") return LayerKind::kCATv2;
  if (s == "LCAT" || s == "L-CAT") return LayerKind::kLCAT;
  if (s == "LCATv2" || s == "L-CATv2") return LayerKind::kLCATv2;
  throw ConfigError("unknown layer kind '" + std::string(s) + "'");
}

bool uses_v2_score(LayerKind kind) noexcept {
  return kind == LayerKind::kGATv2 || kind == LayerKind::kCATv2 || kind == LayerKind::kLCATv2;
}

bool has_learnable_lambdas(LayerKind kind) noexcept { return kind == LayerKind::kLCAT || kind == LayerKind::kLCATv2; }

Matrix Initializer::sample(std::size_t rows, std::size_t cols, Rng& rng) const {
  if (!(gain > 0.0)) throw ConfigError("initializer gain must be > 0");
  Matrix m(rows, cols);
  const double fan = static_cast<double>(rows + cols);
  if (kind == Kind::kGlorotUniform) {
    const double lim = gain * std::sqrt(6.0 / fan);
    for (double& v : m.data()) v = -lim + 2.0 * lim * rng.uniform();
  } else {
    const double sd = gain * std::sqrt(2.0 / fan);
    for (double& v : m.data()) v = sd * rng.normal();
  }
  return m;
}

LcatLayer::LcatLayer(const LayerConfig& config, const Initializer& init, Rng& rng) : config_(config) {
  if (config.in_dim == 0 || config.out_dim == 0) throw ConfigError("layer dimensions must be >= 1");
  if (config.heads == 0) throw ConfigError("layer needs at least one head");
  if (!(config.leaky_slope >= 0.0 && config.leaky_slope < 1.0)) throw ConfigError("leaky slope must lie in [0, 1)");
  const std::size_t alen = uses_v2_score(config.kind) ? config.out_dim : 2 * config.out_dim;
  for (std::size_t h = 0; h < config.heads; ++h) {
    W.push_back({"W" + std::to_string(h), init.sample(config.in_dim, config.out_dim, rng)});
    a.push_back({"a" + std::to_string(h), init.sample(alen, 1, rng)});
  }
  bias = {"bias", Matrix(1, output_dim())};
  x1 = {"lambda1_x", Matrix::scalar(config.lambda1_x)};
  x2 = {"lambda2_x", Matrix::scalar(config.lambda2_x)};
}

std::size_t LcatLayer::output_dim() const noexcept {
  return config_.merge == HeadMerge::kConcat ? config_.heads * config_.out_dim : config_.out_dim;
}

std::vector<ad::Parameter*> LcatLayer::parameters() {
  std::vector<ad::Parameter*> out;
  for (auto& w : W) out.push_back(&w);
  if (config_.kind != LayerKind::kGCN)
    for (auto& v : a) out.push_back(&v);
  out.push_back(&bias);
  if (has_learnable_lambdas(config_.kind)) {
    out.push_back(&x1);
    out.push_back(&x2);
  }
  return out;
}

void LcatLayer::copy_weights_from(const LcatLayer& other) {
  if (other.W.size() != W.size() || other.bias.value.cols() != bias.value.cols())
    throw ShapeError("copy_weights_from: layer shapes differ");
  for (std::size_t h = 0; h < W.size(); ++h) {
    if (other.W[h].value.rows() != W[h].value.rows() || other.W[h].value.cols() != W[h].value.cols() ||
        other.a[h].value.rows() != a[h].value.rows())
      throw ShapeError("copy_weights_from: head shapes differ");
    W[h].value = other.W[h].value;
    a[h].value = other.a[h].value;
  }
  bias.value = other.bias.value;
}

void LcatLayer::force_lambdas(std::optional<double> lambda1, std::optional<double> lambda2) {
  forced_l1_ = lambda1;
  forced_l2_ = lambda2;
}

std::pair<double, double> LcatLayer::effective_lambdas() const {
  const auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-10.0 * x)); };
  double l1 = 1.0, l2 = 1.0;
  switch (config_.kind) {
    case LayerKind::kGCN: l1 = 0.0; l2 = 1.0; break;
    case LayerKind::kGAT:
    case LayerKind::kGATv2: l1 = 1.0; l2 = 0.0; break;
    case LayerKind::kCAT:
    case LayerKind::kCATv2: l1 = 1.0; l2 = 1.0; break;
    case LayerKind::kLCAT:
    case LayerKind::kLCATv2: l1 = sig(x1.value.item()); l2 = sig(x2.value.item()); break;
  }
  if (forced_l1_) l1 = *forced_l1_;
  if (forced_l2_) l2 = *forced_l2_;
  return {l1, l2};
}

bool LcatLayer::uniform_attention() const { return config_.kind == LayerKind::kGCN && !forced_l1_; }

std::pair<ad::Tensor, ad::Tensor> LcatLayer::lambda_tensors(ad::Tape& tape) {
  const auto [l1, l2] = effective_lambdas();
  const bool learn = has_learnable_lambdas(config_.kind);
  ad::Tensor t1 = learn && !forced_l1_ ? ad::sigmoid(ad::scale(tape.parameter(x1), 10.0)) : tape.constant_scalar(l1);
  ad::Tensor t2 = learn && !forced_l2_ ? ad::sigmoid(ad::scale(tape.parameter(x2), 10.0)) : tape.constant_scalar(l2);
  return {t1, t2};
}

ad::Tensor LcatLayer::head_forward(ad::Tape& tape, const Graph& graph, const ad::Tensor& h, std::size_t head,
                                   const ad::Tensor& lambda1, const ad::Tensor& lambda2, ad::Tensor* gamma_out) {
  const ad::Tensor z = ad::matmul(h, tape.parameter(W[head]));
  if (uniform_attention()) {
    if (gamma_out) {
      Matrix g(graph.num_entries(), 1);
      const auto off = graph.row_offsets();
      for (std::size_t i = 0; i < graph.num_nodes(); ++i)
        for (auto e = off[i]; e < off[i + 1]; ++e)
          g(static_cast<std::size_t>(e), 0) = 1.0 / static_cast<double>(graph.degree(i));
      *gamma_out = tape.constant(std::move(g));
    }
    return ad::neighborhood_mean(graph, z, tape.constant_scalar(1.0));
  }

  const bool raw_scores = !lambda2.requires_grad() && lambda2.value().item() == 0.0;
  const ad::Tensor zh = raw_scores ? z : ad::neighborhood_mean(graph, z, lambda2);
  const ad::Tensor av = tape.parameter(a[head]);
  ad::Tensor alpha;
  if (uses_v2_score(config_.kind)) {
    alpha = ad::pair_sum_scores(graph, zh, av, config_.leaky_slope);
  } else {
    const std::size_t d = config_.out_dim;
    const ad::Tensor el = ad::matmul(zh, ad::slice_rows(av, 0, d));
    const ad::Tensor er = ad::matmul(zh, ad::slice_rows(av, d, d));
    auto rows = std::make_shared<const std::vector<NodeId>>(graph.entry_rows());
    auto cols = std::make_shared<const std::vector<NodeId>>(graph.col_indices().begin(), graph.col_indices().end());
    alpha = ad::leaky_relu(ad::add(ad::gather_rows(el, rows), ad::gather_rows(er, cols)), config_.leaky_slope);
  }
  const ad::Tensor gamma = ad::segment_softmax(ad::scale_by(lambda1, alpha), graph);
  if (gamma_out) *gamma_out = gamma;
  return ad::weighted_aggregate(graph, gamma, z);
}

ad::Tensor LcatLayer::forward(ad::Tape& tape, const Graph& graph, const ad::Tensor& h) {
  if (!graph.has_self_loops()) throw GraphError("layer forward requires a graph with self-loops");
  if (h.rows() != graph.num_nodes())
    throw ShapeError("layer forward: " + std::to_string(h.rows()) + " feature rows for " +
                     std::to_string(graph.num_nodes()) + " nodes");
  if (h.cols() != config_.in_dim)
    throw ShapeError("layer forward: input width " + std::to_string(h.cols()) + ", layer expects " +
                     std::to_string(config_.in_dim));
  const auto [l1, l2] = lambda_tensors(tape);
  std::vector<ad::Tensor> outs;
  for (std::size_t k = 0; k < config_.heads; ++k) outs.push_back(head_forward(tape, graph, h, k, l1, l2, nullptr));
  ad::Tensor merged = outs.size() == 1              ? outs[0]
                      : config_.merge == HeadMerge::kConcat ? ad::concat_cols(outs)
                                                            : ad::average(outs);
  return ad::add_row_bias(merged, tape.parameter(bias));
}

std::vector<std::vector<double>> LcatLayer::attention_coefficients(const Graph& graph, const Matrix& h) {
  if (!graph.has_self_loops()) throw GraphError("attention_coefficients requires a graph with self-loops");
  if (h.rows() != graph.num_nodes() || h.cols() != config_.in_dim)
    throw ShapeError("attention_coefficients: input " + h.shape_string() + " does not fit the layer");
  ad::Tape tape;
  const ad::Tensor ht = tape.constant(h);
  const auto [l1, l2] = lambda_tensors(tape);
  std::vector<std::vector<double>> out;
  for (std::size_t k = 0; k < config_.heads; ++k) {
    ad::Tensor g;
    head_forward(tape, graph, ht, k, l1, l2, &g);
    out.push_back(g.value().values());
  }
  return out;
}

}  // namespace lcat

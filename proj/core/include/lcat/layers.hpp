#pragma once

#include <memory>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "lcat/autodiff.hpp"
#include "lcat/graph.hpp"
#include "lcat/rng.hpp"

namespace lcat {

enum class LayerKind { kGCN, kGAT, kGATv2, kCAT, kCATv2, kLCAT, kLCATv2 };

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view s);
/// Score a^T LeakyReLU(z_i + z_j) instead of LeakyReLU(a^T [z_i || z_j]).
bool uses_v2_score(LayerKind kind) noexcept;
bool has_learnable_lambdas(LayerKind kind) noexcept;

enum class HeadMerge { kConcat, kAverage };

struct Initializer {
  enum class Kind { kGlorotUniform, kGlorotNormal };
  Kind kind = Kind::kGlorotUniform;
  double gain = 1.0;

  static Initializer glorot_uniform(double gain = 1.0) { return {Kind::kGlorotUniform, gain}; }
  static Initializer glorot_normal(double gain = 1.0) { return {Kind::kGlorotNormal, gain}; }

  /// Uniform on +-gain sqrt(6 / (fan_in + fan_out)) or normal with standard
  /// deviation gain sqrt(2 / (fan_in + fan_out)); fan_in = rows, fan_out = cols.
  [[nodiscard]] Matrix sample(std::size_t rows, std::size_t cols, Rng& rng) const;
};

struct LayerConfig {
  LayerKind kind = LayerKind::kLCAT;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::size_t heads = 1;
  HeadMerge merge = HeadMerge::kConcat;
  double leaky_slope = 0.2;
  /// Initial free parameters of learnable lambdas.
  double lambda1_x = 0.0;
  double lambda2_x = 0.0;
};

/// Attention layer covering GCN, GAT, GATv2, CAT, CATv2, L-CAT and L-CATv2.
/// Per head: z = H W, z_hat = neighborhood_mean(z, lambda2),
/// Psi_ij = lambda1 alpha(z_hat_i, z_hat_j), gamma = row softmax of Psi,
/// out_i = sum_j gamma_ij z_j. Heads are merged, then a bias is added.
class LcatLayer {
 public:
  LcatLayer(const LayerConfig& config, const Initializer& init, Rng& rng);
  LcatLayer(const LcatLayer&) = delete;
  LcatLayer& operator=(const LcatLayer&) = delete;

  ad::Tensor forward(ad::Tape& tape, const Graph& graph, const ad::Tensor& h);
  ad::Tensor forward(ad::Tape& tape, const Graph& graph, const Matrix& h) { return forward(tape, graph, tape.constant(h)); }

  /// Gamma per head, aligned with the graph's CSR entries.
  std::vector<std::vector<double>> attention_coefficients(const Graph& graph, const Matrix& h);

  /// (lambda1, lambda2). GCN reports lambda2 = 1 by convention.
  [[nodiscard]] std::pair<double, double> effective_lambdas() const;

  /// Test hook: replaces the effective lambdas with exact constants.
  void force_lambdas(std::optional<double> lambda1, std::optional<double> lambda2);

  [[nodiscard]] std::vector<ad::Parameter*> parameters();
  [[nodiscard]] const LayerConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::size_t output_dim() const noexcept;

  /// Copies W, a and bias from another layer of identical shape.
  void copy_weights_from(const LcatLayer& other);

  std::vector<ad::Parameter> W;  // in_dim x out_dim per head
  std::vector<ad::Parameter> a;  // 2 out_dim x 1 (GAT form) or out_dim x 1 (v2 form) per head
  ad::Parameter bias;            // 1 x output_dim
  ad::Parameter x1;
  ad::Parameter x2;

 private:
  ad::Tensor head_forward(ad::Tape& tape, const Graph& graph, const ad::Tensor& h, std::size_t head,
                          const ad::Tensor& lambda1, const ad::Tensor& lambda2, ad::Tensor* gamma_out);
  std::pair<ad::Tensor, ad::Tensor> lambda_tensors(ad::Tape& tape);
  [[nodiscard]] bool uniform_attention() const;

  LayerConfig config_;
  std::optional<double> forced_l1_;
  std::optional<double> forced_l2_;
};

}  // namespace lcat

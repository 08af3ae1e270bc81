#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include "lcat/ansatz.hpp"
#include "lcat/autodiff.hpp"
#include "lcat/csbm.hpp"

namespace lcat {

namespace ad {

/// Constants of the fused ansatz aggregation.
struct AnsatzAggregateSpec {
  Graph graph;
  /// Aggregated values x_j (the raw projections), one per node.
  std::shared_ptr<const std::vector<double>> values;
  double mu_norm = 1.0;
  double R = 1.0;
  double beta = kDefaultAnsatzSlope;
};

/// out_i = sum_{j in N*_i} gamma_ij x_j with gamma = row softmax of
/// lambda1 * Psi(s_i, s_j; C) and s = (x_i + lambda2 * sum_{N_i} x_j) / (1 + lambda2 |N_i|).
/// C, lambda1 and lambda2 are 1x1. The output depends on three scalars only, so
/// the forward pass keeps an n x 3 Jacobian and memory stays O(n).
Tensor ansatz_aggregate(const Tensor& C, const Tensor& lambda1, const Tensor& lambda2, AnsatzAggregateSpec spec);

}  // namespace ad

enum class LearnedModelKind { kGCN, kGAT, kCAT, kLCAT };
std::string_view to_string(LearnedModelKind kind);
LearnedModelKind parse_learned_model_kind(std::string_view s);

struct LearnedSyntheticConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 100;
  double lr_decay_gamma = 1.0;
  double beta = kDefaultAnsatzSlope;
  /// <= 0 selects 7 / |mu|.
  double R = 0.0;
  double initial_C = 1.0;
  /// Initial free parameters of lambda1, lambda2 (lambda = sigmoid(10 x)).
  double initial_x1 = 0.0;
  double initial_x2 = 0.0;
};

/// One-layer ansatz estimator with learnable scalars:
///   GCN: C;  GAT, CAT: C;  L-CAT: C, lambda1, lambda2.
/// The logit of node i is sum_j gamma_ij x_j - C |mu| / 2 and is trained with
/// binary cross-entropy towards 1 for nodes outside C_0, on all nodes.
class LearnedSyntheticModel {
 public:
  LearnedSyntheticModel(LearnedModelKind kind, const CsbmSample& sample, const LearnedSyntheticConfig& config);

  ad::Tensor logits(ad::Tape& tape);
  ad::Tensor loss(ad::Tape& tape);
  [[nodiscard]] std::vector<ad::Parameter*> parameters();

  [[nodiscard]] LearnedModelKind kind() const noexcept { return kind_; }
  [[nodiscard]] double C() const { return c_.value.item(); }
  /// Effective lambdas; pinned kinds report their constants (GCN: 0 and 1).
  [[nodiscard]] double lambda1() const;
  [[nodiscard]] double lambda2() const;
  /// Accuracy of the current parameters on all nodes.
  [[nodiscard]] double accuracy();

 private:
  LearnedModelKind kind_;
  const CsbmSample* sample_;
  ad::AnsatzAggregateSpec spec_;
  std::vector<double> targets_;
  std::vector<std::uint8_t> all_;
  ad::Parameter c_;
  ad::Parameter x1_;
  ad::Parameter x2_;
};

struct LearnedSyntheticResult {
  LearnedModelKind kind = LearnedModelKind::kGAT;
  double accuracy = 0.0;
  double C = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::vector<double> losses;
};

/// Full-batch Adam on the model's scalars; accuracy is taken after the last step.
LearnedSyntheticResult train_learned_synthetic(LearnedModelKind kind, const CsbmSample& sample,
                                               const LearnedSyntheticConfig& config);

}  // namespace lcat

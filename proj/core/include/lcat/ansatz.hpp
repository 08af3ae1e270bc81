#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lcat/csbm.hpp"
#include "lcat/graph.hpp"
#include "lcat/matrix.hpp"

namespace lcat {

/// Fixed two-layer attention score
///   Psi(h_i, h_j) = r^T LeakyReLU_beta(S [w^T h_i; w^T h_j] + b)
/// with w = mu / |mu|, b = |mu| C (-3/2 x4, -1/2 x4), r = R (2, -2, -2, 2, -1 x4).
struct AnsatzParams {
  static constexpr std::array<std::array<double, 2>, 8> kSigns{{
      {1, 1}, {-1, -1}, {1, -1}, {-1, 1}, {0, 1}, {1, 0}, {0, -1}, {-1, 0}}};
  static constexpr std::array<double, 8> kBiasPattern{-1.5, -1.5, -1.5, -1.5, -0.5, -0.5, -0.5, -0.5};
  static constexpr std::array<double, 8> kOutputPattern{2, -2, -2, 2, -1, -1, -1, -1};

  std::vector<double> w_tilde;
  std::array<double, 8> b{};
  std::array<double, 8> r{};
  double mu_norm = 0.0;
  double R = 1.0;
  double C = 1.0;
  double beta = 0.01;
};

AnsatzParams build_ansatz(std::span<const double> mu, double R, double C, double beta);

/// Score on already-projected inputs x_i = w^T h_i, x_j = w^T h_j.
double ansatz_score_projected(const AnsatzParams& ansatz, double x_i, double x_j) noexcept;
double ansatz_score(const AnsatzParams& ansatz, std::span<const double> h_i, std::span<const double> h_j);

/// Per-row weights aligned with a graph's CSR entries.
struct EdgeWeights {
  Graph graph;
  std::vector<double> values;

  [[nodiscard]] std::span<const double> row(std::size_t i) const;
  /// Weight of entry (i, j); 0 when the entry is absent.
  [[nodiscard]] double at(std::size_t i, std::size_t j) const;
};

/// Row softmax over N*_i of the ansatz scores (row max subtracted first).
EdgeWeights attention_gammas(const Graph& graph, const FeatureMatrix& h, const AnsatzParams& ansatz);
/// Same on projected scalars.
EdgeWeights attention_gammas_projected(const Graph& graph, std::span<const double> x, const AnsatzParams& ansatz);

enum class EstimatorKind { kGCN, kGAT, kCAT };
std::string_view to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(std::string_view s);

/// Per-model settings of the one-layer estimator:
///   GCN: uniform gammas, C = 0.
///   GAT: ansatz scores on raw features, C = 1.
///   CAT: ansatz scores on neighborhood-mean features, C = (p - q) / (p + 2q).
struct EstimatorMode {
  EstimatorKind kind = EstimatorKind::kGAT;
  double C = 1.0;
  double beta = 0.01;

  static EstimatorMode defaults(EstimatorKind kind, double p, double q);
};

/// Default LeakyReLU slope of the GAT and CAT estimators.
inline constexpr double kDefaultAnsatzSlope = 0.01;

struct GammaGroupMeans {
  /// (i, j) in C_0^2 u C_1^2, C_-1 x C_1, everything else. Empty groups are nullopt.
  std::array<std::optional<double>, 3> mean;
  std::array<std::size_t, 3> count{};
};

struct EstimateResult {
  std::vector<double> logits;
  /// 1 where the node is predicted to be in C_0 (logit < 0).
  std::vector<std::uint8_t> predicted_c0;
  double accuracy = 0.0;
  std::optional<GammaGroupMeans> gamma_groups;
};

struct EstimateOptions {
  bool gamma_groups = false;
};

/// h'_i = sum_{j in N*_i} gamma_ij w^T X_j - C |mu| / 2; predicts C_0 iff h'_i < 0.
/// Accuracy is over all n nodes. R <= 0 selects 7 / |mu|. Throws DomainError for
/// CAT with p == q.
EstimateResult estimate_and_classify(const CsbmSample& sample, const EstimatorMode& mode, double R = 0.0,
                                     EstimateOptions options = {});

GammaGroupMeans gamma_group_summary(const EdgeWeights& gammas, std::span<const std::int8_t> eps);

/// w^T X_i for every row.
std::vector<double> project_rows(const FeatureMatrix& x, std::span<const double> w);

}  // namespace lcat

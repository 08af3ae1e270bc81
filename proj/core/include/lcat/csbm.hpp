#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <filesystem>
#include <limits>
#include <vector>

#include "lcat/dataset.hpp"
#include "lcat/graph.hpp"
#include "lcat/matrix.hpp"
#include "lcat/rng.hpp"

namespace lcat {

/// Contextual stochastic block model with three latent classes eps in
/// {-1, 0, 1}: X_i ~ N(eps_i mu, sigma^2 I), intra-class pairs ~ Ber(p),
/// inter-class pairs ~ Ber(q).
struct CsbmParams {
  std::size_t n = 10000;
  double p = 0.5;
  double q = 0.1;
  double mu_norm = 1.0;
  double sigma = 0.1;
  /// Feature dimension; 0 selects default_feature_dim(n).
  std::size_t d = 0;
  std::uint64_t seed = 0;

  void validate() const;
  [[nodiscard]] std::size_t feature_dim() const;
};

/// floor(n / (5 ln^2 n)), at least 1.
std::size_t default_feature_dim(std::size_t n);

/// 10 sigma sqrt(2 ln n): the far-apart-classes setting.
double easy_regime_mu_norm(std::size_t n, double sigma);

struct CsbmSample {
  Graph graph;
  FeatureMatrix features;
  std::vector<std::int8_t> eps;
  /// 1 iff eps == 0 (the C_0 vs C_-1 u C_1 task).
  std::vector<std::uint8_t> task_labels;
  std::vector<double> mu;
  CsbmParams params;
};

struct CsbmSampleOptions {
  /// Test hook: assign eps in exact thirds (in shuffled order) instead of i.i.d.
  bool stratified_classes = false;
};

/// Draws a sample. mu = (mu_norm / sqrt(d)) * (1, ..., 1); each unordered pair
/// is drawn once, then symmetrized; self-loops are added.
CsbmSample sample_csbm(const CsbmParams& params, Rng& rng, CsbmSampleOptions options = {});
/// Same, seeded from params.seed.
CsbmSample sample_csbm(const CsbmParams& params, CsbmSampleOptions options = {});

struct SeparabilityThresholds {
  double gat = 0.0;
  /// +infinity when p == q.
  double cat = std::numeric_limits<double>::infinity();
};

/// sigma sqrt(ln n) and sigma sqrt((p + 2q) ln n / (n (p - q)^2)), natural log,
/// unit constants.
SeparabilityThresholds separability_thresholds(const CsbmParams& params);

struct ConcentrationReport {
  std::array<std::size_t, 3> class_sizes{};  // indexed by eps + 1
  std::size_t min_degree = 0;  // |N_i|, self excluded
  std::size_t max_degree = 0;
  double mean_degree = 0.0;
  double expected_degree = 0.0;  // n (p + 2q) / 3
  double relative_band = 0.0;    // 10 / sqrt(ln n)
  /// Mean over nodes of |N_i n C_eps_i| / D_ii, and of |N_i n C_k| / D_ii for k != eps_i.
  double mean_intra_ratio = 0.0;
  double mean_inter_ratio = 0.0;
  double expected_intra_ratio = 0.0;  // p / (p + 2q)
  double expected_inter_ratio = 0.0;  // q / (p + 2q)
  bool class_sizes_concentrated = false;  // |C_k| = n/3 +- sqrt(n ln n)
  bool degrees_concentrated = false;      // every D_ii inside the band
  bool neighbor_counts_concentrated = false;  // every |N_i n C_k| inside the band
  [[nodiscard]] bool all_hold() const noexcept {
    return class_sizes_concentrated && degrees_concentrated && neighbor_counts_concentrated;
  }
};

ConcentrationReport concentration_report(const CsbmSample& sample);

/// Dataset view of a sample: binary task labels as classes {0, 1}, no splits.
LabelledDataset to_dataset(const CsbmSample& sample);

/// Writes the dataset manifest files plus `<stem>.csbm.json` holding params and
/// eps for exact replay. Returns the manifest path.
std::filesystem::path save_csbm(const CsbmSample& sample, const LabelledDataset& data,
                                const std::filesystem::path& dir, const std::string& stem = "csbm");

}  // namespace lcat

#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "lcat/layers.hpp"

namespace lcat {

struct ModelSpec {
  LayerKind kind = LayerKind::kLCAT;
  /// Optional per-layer kinds; overrides `kind` when non-empty (size = depth).
  std::vector<LayerKind> layer_kinds;
  std::size_t depth = 4;
  std::size_t in_dim = 0;
  std::size_t hidden = 32;
  /// Class count, or 1 for a binary task with a single logit.
  std::size_t out_dim = 0;
  /// Heads of attention layers; GCN layers always use one head.
  std::size_t heads = 4;
  /// Hidden layers concatenate heads (hidden / heads each); the output layer averages.
  HeadMerge hidden_merge = HeadMerge::kConcat;
  HeadMerge output_merge = HeadMerge::kAverage;
  bool residual = true;
  double leaky_slope = 0.2;
  double lambda1_x = 0.0;
  double lambda2_x = 0.0;

  void validate() const;
  [[nodiscard]] LayerKind kind_at(std::size_t layer) const;
};

/// Stack of LcatLayers with PReLU between them (slope 0.25, one per site) and
/// residual additions where input and output widths agree. The output layer
/// has no activation and no residual.
class Model {
 public:
  Model(const ModelSpec& spec, const Initializer& init, Rng& rng);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  ad::Tensor forward(ad::Tape& tape, const Graph& graph, const Matrix& x);

  [[nodiscard]] std::vector<ad::Parameter*> parameters();
  [[nodiscard]] std::size_t parameter_count();
  [[nodiscard]] std::vector<std::pair<double, double>> lambdas() const;
  [[nodiscard]] bool has_learnable_lambdas() const;

  [[nodiscard]] std::vector<Matrix> snapshot();
  void restore(const std::vector<Matrix>& values);

  [[nodiscard]] std::size_t num_layers() const noexcept { return layers_.size(); }
  LcatLayer& layer(std::size_t i) { return *layers_.at(i); }
  [[nodiscard]] const ModelSpec& spec() const noexcept { return spec_; }

 private:
  ModelSpec spec_;
  std::vector<std::unique_ptr<LcatLayer>> layers_;
  std::vector<std::unique_ptr<ad::Parameter>> prelu_;
};

std::unique_ptr<Model> build_model(const ModelSpec& spec, const Initializer& init, Rng& rng);

}  // namespace lcat

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lcat/dataset.hpp"
#include "lcat/metrics.hpp"
#include "lcat/model.hpp"

namespace lcat {

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t epochs = 200;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double lr_decay_gamma = 0.998;
  /// Must stay 0 for models with learnable lambdas.
  double weight_decay = 0.0;
  /// Stop after this many epochs without a validation improvement.
  std::optional<std::size_t> early_stop_patience;
  std::uint64_t seed = 0;
  Metric metric = Metric::kAccuracy;

  void validate() const;
};

/// Entry t describes the parameters after t optimizer steps; a run of E
/// epochs without early stop or abort has E + 1 entries.
struct TrainLog {
  std::vector<double> train_loss;
  std::vector<std::optional<double>> train_metric;
  std::vector<std::optional<double>> val_metric;
  std::vector<std::optional<double>> test_metric;
  /// lambdas[t][layer] = (lambda1, lambda2).
  std::vector<std::vector<std::pair<double, double>>> lambdas;
  std::size_t best_epoch = 0;
  std::optional<double> best_val_metric;
  std::optional<double> test_at_best;
  std::vector<Matrix> best_parameters;
  bool aborted = false;
  std::string abort_reason;

  [[nodiscard]] std::size_t entries() const noexcept { return train_loss.size(); }
};

/// Rejects configurations that would bias learnable lambdas (weight decay > 0).
void check_train_config(const Model& model, const TrainConfig& config);

/// Full-batch training. Binary datasets (two classes) expect a model with one
/// output and use binary cross-entropy; otherwise softmax cross-entropy. The
/// model ends holding the best-validation parameters.
TrainLog train(Model& model, const LabelledDataset& data, const TrainConfig& config);

std::string train_log_to_json(const TrainLog& log);

}  // namespace lcat

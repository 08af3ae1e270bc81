#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "lcat/experiment_config.hpp"
#include "lcat/results.hpp"

namespace lcat {

/// Fixed-ansatz estimators over a CSBM grid: accuracy and gamma-group means per
/// (model, grid point, run), plus the two separability thresholds per grid point.
/// All models of a (grid point, run) share one sample.
std::vector<ResultRow> run_synthetic_sweep(const ExperimentConfig& config);

/// Scalar-parameter training of the ansatz estimators: final accuracy, C and
/// (for LCAT) lambda1, lambda2 per (model, grid point, run).
std::vector<ResultRow> run_learned_synthetic(const ExperimentConfig& config);

/// Trains every model kind over `runs` seeds on a dataset manifest. Emits the
/// best-validation test metric per run, mean/std per model, and paired t-tests
/// of each CAT-family model against its baseline (left empty for one run).
std::vector<ResultRow> run_node_classification(const ExperimentConfig& config);

/// Feature-noise, edge-noise or initialization study on a dataset manifest.
std::vector<ResultRow> run_robustness(const ExperimentConfig& config);

/// Dispatches on config.kind; rows come back sorted.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

/// (model, baseline) pairs tested for significance.
std::vector<std::pair<std::string, std::string>> significance_pairs();

/// Calls task(k) for k in [0, count) on up to `jobs` threads. The first
/// exception thrown by any task is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task);

}  // namespace lcat

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lcat/csbm.hpp"
#include "lcat/layers.hpp"
#include "lcat/learned_synthetic.hpp"
#include "lcat/train.hpp"

namespace lcat {

enum class ExperimentKind { kSyntheticFixed, kSyntheticLearned, kNodeClassification, kNoiseFeature, kNoiseEdge, kInit };

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view s);

enum class OutputFormat { kCsv, kJson };
OutputFormat parse_output_format(std::string_view s);

struct GridSpec {
  /// Synthetic grids: "q", "mu_norm", "p" or "sigma". Robustness grids are fixed
  /// by the experiment kind.
  std::string name;
  std::vector<double> values;

  /// `steps` evenly spaced points from min to max inclusive (steps = 1 gives min).
  static GridSpec linspace(std::string name, double min, double max, std::size_t steps);
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kSyntheticFixed;
  std::string id;
  CsbmParams csbm;
  std::filesystem::path dataset;
  std::vector<std::string> models;
  GridSpec grid;
  std::size_t runs = 50;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  OutputFormat format = OutputFormat::kCsv;
  std::size_t jobs = 1;
  /// Fill the seconds column with wall time (makes output non-reproducible).
  bool record_time = false;

  // Node classification and robustness.
  ModelSpec model;
  TrainConfig train;
  Initializer init = Initializer::glorot_uniform(1.0);

  // Learned synthetic.
  LearnedSyntheticConfig learned;

  /// Throws ConfigError for empty grids, zero runs, unknown models or a grid
  /// parameter that does not fit the experiment.
  void validate() const;
};

/// Defaults for an experiment kind (grid, models, runs).
ExperimentConfig default_experiment_config(ExperimentKind kind);

/// Reads a TOML or JSON (by extension) config on top of the kind's defaults.
/// The file's `experiment` key, when present, must match `kind`.
ExperimentConfig load_experiment_config(const std::filesystem::path& path, std::optional<ExperimentKind> kind);
/// Same without the final validate(), for callers that apply overrides first.
ExperimentConfig read_experiment_config(const std::filesystem::path& path, std::optional<ExperimentKind> kind);

/// Same from text; `json` selects the JSON syntax.
ExperimentConfig parse_experiment_config(std::string_view text, bool json, std::optional<ExperimentKind> kind);

/// The fixed robustness grids.
std::vector<double> feature_noise_levels();
std::vector<double> edge_noise_levels();
std::vector<Initializer> robustness_initializers();

}  // namespace lcat

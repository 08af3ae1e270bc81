#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lcat/graph.hpp"
#include "lcat/matrix.hpp"

namespace lcat {

enum class Split : std::uint8_t { kNone = 0, kTrain, kVal, kTest };

/// Graph + features + integer class labels + disjoint train/val/test masks.
/// Unlabelled nodes carry label -1.
struct LabelledDataset {
  Graph graph;
  FeatureMatrix features;
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<std::uint8_t> train_mask;
  std::vector<std::uint8_t> val_mask;
  std::vector<std::uint8_t> test_mask;

  [[nodiscard]] std::size_t num_nodes() const noexcept { return graph.num_nodes(); }
  /// Throws FormatError when masks overlap or a masked node lacks a label.
  void validate() const;
};

/// Reads a manifest JSON {"n", "edges", "features", "labels", "splits",
/// "directed"}; file paths are relative to the manifest directory. The graph is
/// always symmetrized with self-loops added.
LabelledDataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes the manifest and its four data files into `dir` as
/// `<stem>.edges.tsv`, `<stem>.features.bin`, `<stem>.labels.tsv`,
/// `<stem>.splits.tsv` and `<stem>.json`. Returns the manifest path.
std::filesystem::path save_dataset(const LabelledDataset& data, const std::filesystem::path& dir,
                                   const std::string& stem = "dataset");

/// Binary feature file: "LCF1", n and d as u64 little-endian, then n*d float32
/// little-endian values in row-major order.
FeatureMatrix read_feature_file(const std::filesystem::path& path);
void write_feature_file(const FeatureMatrix& features, const std::filesystem::path& path);

/// Random disjoint split of all nodes with the given fractions (rest -> test).
void assign_random_splits(LabelledDataset& data, double train_fraction, double val_fraction,
                          std::uint64_t seed);

}  // namespace lcat

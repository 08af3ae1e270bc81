#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "lcat/csbm.hpp"
#include "lcat/dataset.hpp"
#include "lcat/error.hpp"
#include "test_support.hpp"

using namespace lcat;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures{LCAT_FIXTURES_DIR};

std::string format_error_of(const fs::path& manifest) {
  try {
    (void)load_dataset(manifest);
  } catch (const FormatError& e) {
    return e.what();
  }
  return {};
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST(Dataset, LoadsThreeNodeFixture) {
  const LabelledDataset d = load_dataset(kFixtures / "tiny.json");
  EXPECT_EQ(d.num_nodes(), 3u);
  EXPECT_EQ(d.features.cols(), 2u);
  EXPECT_EQ(d.num_classes, 2);
  EXPECT_EQ(std::count(d.train_mask.begin(), d.train_mask.end(), 1), 1);
  EXPECT_EQ(std::count(d.val_mask.begin(), d.val_mask.end(), 1), 1);
  EXPECT_EQ(std::count(d.test_mask.begin(), d.test_mask.end(), 1), 1);
  EXPECT_TRUE(d.graph.has_edge(1, 0));
  EXPECT_TRUE(d.graph.has_self_loops());
  EXPECT_DOUBLE_EQ(d.features(2, 1), 0.5);
}

TEST(Dataset, WrongMagicNamesTheBytes) {
  const std::string msg = format_error_of(kFixtures / "bad_magic.json");
  EXPECT_NE(msg.find("LCX9"), std::string::npos) << msg;
  EXPECT_NE(msg.find("offset 0"), std::string::npos) << msg;
}

TEST(Dataset, MissingFileAndCountMismatchAreReported) {
  const auto dir = fx::scratch_dir("dataset_errors");
  fs::copy(kFixtures, dir, fs::copy_options::recursive);
  write_text(dir / "missing.json",
             R"({"n": 3, "edges": "nope.tsv", "features": "tiny.features.bin", "labels": "tiny.labels.tsv", "splits": "tiny.splits.tsv"})");
  EXPECT_NE(format_error_of(dir / "missing.json").find("nope.tsv"), std::string::npos);

  write_text(dir / "count.json",
             R"({"n": 4, "edges": "tiny.edges.tsv", "features": "tiny.features.bin", "labels": "tiny.labels.tsv", "splits": "tiny.splits.tsv"})");
  const std::string msg = format_error_of(dir / "count.json");
  EXPECT_NE(msg.find("tiny.features.bin"), std::string::npos) << msg;
  EXPECT_NE(msg.find("count mismatch"), std::string::npos) << msg;

  write_text(dir / "bad.edges.tsv", "0\t1\n1\tx\n");
  write_text(dir / "header.json",
             R"({"n": 3, "edges": "bad.edges.tsv", "features": "tiny.features.bin", "labels": "tiny.labels.tsv", "splits": "tiny.splits.tsv"})");
  EXPECT_NE(format_error_of(dir / "header.json").find("line 2"), std::string::npos);
}

TEST(Dataset, TruncatedFeatureFileReportsOffset) {
  const auto dir = fx::scratch_dir("dataset_truncated");
  std::ifstream in(kFixtures / "tiny.features.bin", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  std::ofstream(dir / "cut.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 4);
  try {
    (void)read_feature_file(dir / "cut.bin");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos);
  }
}

TEST(Dataset, CsbmRoundTripIsBitIdentical) {
  CsbmParams p;
  p.n = 300;
  p.p = 0.2;
  p.q = 0.05;
  p.mu_norm = 1.0;
  p.seed = 17;
  const CsbmSample s = sample_csbm(p);
  LabelledDataset data = to_dataset(s);
  assign_random_splits(data, 0.7, 0.15, 3);
  const auto dir = fx::scratch_dir("csbm_roundtrip");
  const auto manifest = save_csbm(s, data, dir);
  const LabelledDataset back = load_dataset(manifest);
  EXPECT_EQ(back.graph, s.graph);
  ASSERT_EQ(back.features.rows(), s.features.rows());
  for (std::size_t k = 0; k < s.features.size(); ++k)
    ASSERT_EQ(back.features.data()[k], static_cast<double>(static_cast<float>(s.features.data()[k])));
  EXPECT_EQ(back.labels, data.labels);
  EXPECT_EQ(back.train_mask, data.train_mask);
  EXPECT_EQ(back.val_mask, data.val_mask);
  EXPECT_EQ(back.test_mask, data.test_mask);
  EXPECT_TRUE(fs::exists(dir / "csbm.csbm.json"));

  // A second save of the loaded data reproduces the same feature bytes.
  const auto again = save_dataset(back, dir, "again");
  const LabelledDataset twice = load_dataset(again);
  EXPECT_EQ(twice.features, back.features);
}

TEST(Dataset, RandomSplitsAreDisjointAndSized) {
  CsbmParams p;
  p.n = 1000;
  p.p = 0.05;
  p.q = 0.01;
  p.seed = 2;
  LabelledDataset d = to_dataset(sample_csbm(p));
  assign_random_splits(d, 0.7, 0.15, 9);
  std::size_t tr = 0, va = 0, te = 0;
  for (std::size_t i = 0; i < d.num_nodes(); ++i) {
    EXPECT_EQ(d.train_mask[i] + d.val_mask[i] + d.test_mask[i], 1);
    tr += d.train_mask[i];
    va += d.val_mask[i];
    te += d.test_mask[i];
  }
  EXPECT_EQ(tr, 700u);
  EXPECT_EQ(va, 150u);
  EXPECT_EQ(te, 150u);
  d.validate();
}

TEST(Dataset, ValidateRejectsOverlappingMasks) {
  LabelledDataset d = load_dataset(kFixtures / "tiny.json");
  d.val_mask[0] = 1;
  EXPECT_THROW(d.validate(), FormatError);
}

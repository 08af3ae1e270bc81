#include "lcat/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "lcat/error.hpp"
#include "lcat/rng.hpp"

namespace lcat {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "feature files assume a little-endian host");

constexpr std::array<char, 4> kMagic{'L', 'C', 'F', '1'};

[[noreturn]] void fail(const fs::path& file, const std::string& where, const std::string& what) {
  throw FormatError(file.string() + ": " + where + ": " + what);
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw FormatError(path.string() + ": cannot open file");
  return in;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}

long long parse_index(const std::string& s, const fs::path& file, std::size_t line) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    fail(file, "line " + std::to_string(line), "expected an integer, got '" + s + "'");
  }
  if (used != s.size()) fail(file, "line " + std::to_string(line), "expected an integer, got '" + s + "'");
  return v;
}

template <typename Fn>
void for_each_tsv_row(const fs::path& file, Fn&& fn) {
  auto in = open_in(file);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 2)
      fail(file, "line " + std::to_string(lineno), "expected 2 tab-separated fields, got " + std::to_string(fields.size()));
    fn(fields, lineno);
  }
}

}  // namespace

void LabelledDataset::validate() const {
  const std::size_t n = num_nodes();
  if (features.rows() != n) throw FormatError("dataset: features rows != node count");
  if (labels.size() != n) throw FormatError("dataset: labels length != node count");
  if (train_mask.size() != n || val_mask.size() != n || test_mask.size() != n)
    throw FormatError("dataset: mask length != node count");
  for (std::size_t i = 0; i < n; ++i) {
    const int k = train_mask[i] + val_mask[i] + test_mask[i];
    if (k > 1) throw FormatError("dataset: node " + std::to_string(i) + " is in more than one split");
    if (k == 1 && (labels[i] < 0 || labels[i] >= num_classes))
      throw FormatError("dataset: node " + std::to_string(i) + " is in a split but has no valid label");
  }
}

FeatureMatrix read_feature_file(const fs::path& path) {
  auto in = open_in(path, std::ios::binary);
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (in.gcount() != 4) fail(path, "offset 0", "truncated header");
  if (magic != kMagic) {
    std::ostringstream m;
    m << "bad magic bytes '";
    for (char c : magic) {
      if (c >= 32 && c < 127) m << c;
      else m << "\\x" << std::hex << (static_cast<int>(static_cast<unsigned char>(c)));
    }
    m << "' (expected 'LCF1')";
    fail(path, "offset 0", m.str());
  }
  std::uint64_t n = 0, d = 0;
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&d), 8);
  if (!in) fail(path, "offset 4", "truncated header");
  if (d != 0 && n > (std::uint64_t{1} << 40) / d) fail(path, "offset 4", "implausible shape");
  std::vector<float> buf(n * d);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  const auto got = static_cast<std::uint64_t>(in.gcount());
  if (got != buf.size() * sizeof(float))
    fail(path, "offset " + std::to_string(20 + got), "expected " + std::to_string(n * d) + " float32 values, file ends early");
  in.peek();
  if (!in.eof()) fail(path, "offset " + std::to_string(20 + got), "trailing bytes after n*d values");
  FeatureMatrix out(n, d);
  for (std::size_t k = 0; k < buf.size(); ++k) {
    if (!std::isfinite(buf[k])) fail(path, "offset " + std::to_string(20 + 4 * k), "non-finite feature value");
    out.data()[k] = static_cast<double>(buf[k]);
  }
  return out;
}

void write_feature_file(const FeatureMatrix& features, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  out.write(kMagic.data(), 4);
  const std::uint64_t n = features.rows(), d = features.cols();
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(&d), 8);
  std::vector<float> buf(features.size());
  for (std::size_t k = 0; k < buf.size(); ++k) buf[k] = static_cast<float>(features.data()[k]);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw FormatError(path.string() + ": write failed");
}

LabelledDataset load_dataset(const fs::path& manifest_path) {
  json manifest;
  {
    auto in = open_in(manifest_path);
    try {
      manifest = json::parse(in);
    } catch (const json::parse_error& e) {
      fail(manifest_path, "byte " + std::to_string(e.byte), std::string("malformed JSON: ") + e.what());
    }
  }
  const auto base = manifest_path.parent_path();
  auto field = [&](const char* key) -> const json& {
    if (!manifest.contains(key)) fail(manifest_path, "manifest", std::string("missing field '") + key + "'");
    return manifest.at(key);
  };
  auto path_field = [&](const char* key) {
    const auto& v = field(key);
    if (!v.is_string()) fail(manifest_path, "manifest", std::string("field '") + key + "' must be a path string");
    fs::path p = v.get<std::string>();
    return p.is_absolute() ? p : base / p;
  };
  const auto& nv = field("n");
  if (!nv.is_number_integer() || nv.get<long long>() < 0) fail(manifest_path, "manifest", "field 'n' must be a non-negative integer");
  const auto n = nv.get<std::size_t>();
  if (manifest.contains("directed") && !manifest.at("directed").is_boolean())
    fail(manifest_path, "manifest", "field 'directed' must be a boolean");

  const auto edges_path = path_field("edges");
  std::vector<Edge> edges;
  for_each_tsv_row(edges_path, [&](const std::vector<std::string>& f, std::size_t line) {
    const auto i = parse_index(f[0], edges_path, line);
    const auto j = parse_index(f[1], edges_path, line);
    if (i < 0 || j < 0 || i >= static_cast<long long>(n) || j >= static_cast<long long>(n))
      fail(edges_path, "line " + std::to_string(line), "edge (" + f[0] + ", " + f[1] + ") out of range for n=" + std::to_string(n));
    edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
  });

  LabelledDataset data;
  data.graph = Graph::from_edge_list(edges, n, {.symmetrize = true, .add_self_loops = true});

  const auto features_path = path_field("features");
  data.features = read_feature_file(features_path);
  if (data.features.rows() != n)
    fail(features_path, "offset 4", "count mismatch: file has " + std::to_string(data.features.rows()) +
                                        " rows, manifest says n=" + std::to_string(n));

  const auto labels_path = path_field("labels");
  data.labels.assign(n, -1);
  int max_label = -1;
  for_each_tsv_row(labels_path, [&](const std::vector<std::string>& f, std::size_t line) {
    const auto i = parse_index(f[0], labels_path, line);
    const auto k = parse_index(f[1], labels_path, line);
    if (i < 0 || i >= static_cast<long long>(n))
      fail(labels_path, "line " + std::to_string(line), "node " + f[0] + " out of range for n=" + std::to_string(n));
    if (k < 0) fail(labels_path, "line " + std::to_string(line), "negative class id " + f[1]);
    data.labels[static_cast<std::size_t>(i)] = static_cast<int>(k);
    max_label = std::max(max_label, static_cast<int>(k));
  });
  data.num_classes = max_label + 1;

  const auto splits_path = path_field("splits");
  data.train_mask.assign(n, 0);
  data.val_mask.assign(n, 0);
  data.test_mask.assign(n, 0);
  for_each_tsv_row(splits_path, [&](const std::vector<std::string>& f, std::size_t line) {
    const auto i = parse_index(f[0], splits_path, line);
    if (i < 0 || i >= static_cast<long long>(n))
      fail(splits_path, "line " + std::to_string(line), "node " + f[0] + " out of range for n=" + std::to_string(n));
    const auto u = static_cast<std::size_t>(i);
    if (data.train_mask[u] || data.val_mask[u] || data.test_mask[u])
      fail(splits_path, "line " + std::to_string(line), "node " + f[0] + " assigned to more than one split");
    if (f[1] == "train") data.train_mask[u] = 1;
    else if (f[1] == "val") data.val_mask[u] = 1;
    else if (f[1] == "test") data.test_mask[u] = 1;
    else fail(splits_path, "line " + std::to_string(line), "unknown split '" + f[1] + "'");
    if (data.labels[u] < 0) fail(splits_path, "line " + std::to_string(line), "node " + f[0] + " has no label");
  });
  data.validate();
  return data;
}

fs::path save_dataset(const LabelledDataset& data, const fs::path& dir, const std::string& stem) {
  data.validate();
  fs::create_directories(dir);
  const std::string edges_name = stem + ".edges.tsv";
  const std::string features_name = stem + ".features.bin";
  const std::string labels_name = stem + ".labels.tsv";
  const std::string splits_name = stem + ".splits.tsv";

  auto open_out = [](const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw FormatError(p.string() + ": cannot open for writing");
    return out;
  };
  {
    auto out = open_out(dir / edges_name);
    for (const auto& [i, j] : data.graph.upper_edges()) out << i << '\t' << j << '\n';
  }
  write_feature_file(data.features, dir / features_name);
  {
    auto out = open_out(dir / labels_name);
    for (std::size_t i = 0; i < data.labels.size(); ++i)
      if (data.labels[i] >= 0) out << i << '\t' << data.labels[i] << '\n';
  }
  {
    auto out = open_out(dir / splits_name);
    for (std::size_t i = 0; i < data.num_nodes(); ++i) {
      if (data.train_mask[i]) out << i << "\ttrain\n";
      else if (data.val_mask[i]) out << i << "\tval\n";
      else if (data.test_mask[i]) out << i << "\ttest\n";
    }
  }
  json manifest = {{"n", data.num_nodes()},     {"edges", edges_name},   {"features", features_name},
                   {"labels", labels_name},     {"splits", splits_name}, {"directed", false}};
  const auto manifest_path = dir / (stem + ".json");
  auto out = open_out(manifest_path);
  out << manifest.dump(2) << '\n';
  return manifest_path;
}

void assign_random_splits(LabelledDataset& data, double train_fraction, double val_fraction,
                          std::uint64_t seed) {
  const std::size_t n = data.num_nodes();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t k = n; k > 1; --k) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(k - 1)));
    std::swap(order[k - 1], order[j]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
  data.train_mask.assign(n, 0);
  data.val_mask.assign(n, 0);
  data.test_mask.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto i = order[k];
    if (k < n_train) data.train_mask[i] = 1;
    else if (k < n_train + n_val) data.val_mask[i] = 1;
    else data.test_mask[i] = 1;
  }
}

}  // namespace lcat

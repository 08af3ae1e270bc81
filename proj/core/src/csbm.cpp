#include "lcat/csbm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "lcat/error.hpp"

namespace lcat {
namespace {

// Integer threshold t such that P(u64 < t) = p; p == 1 is handled by callers.
std::uint64_t bernoulli_threshold(double p) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(std::ldexp(p, 64));
}

}  // namespace

void CsbmParams::validate() const {
  if (n < 2) throw DomainError("csbm: n must be >= 2");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("csbm: p must lie in [0, 1]");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("csbm: q must lie in [0, 1]");
  if (!(mu_norm >= 0.0) || !std::isfinite(mu_norm)) throw DomainError("csbm: mu_norm must be finite and >= 0");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("csbm: sigma must be finite and > 0");
}

std::size_t CsbmParams::feature_dim() const { return d == 0 ? default_feature_dim(n) : d; }

std::size_t default_feature_dim(std::size_t n) {
  const double ln = std::log(static_cast<double>(n));
  const auto d = static_cast<std::size_t>(std::floor(static_cast<double>(n) / (5.0 * ln * ln)));
  return std::max<std::size_t>(d, 1);
}

double easy_regime_mu_norm(std::size_t n, double sigma) {
  return 10.0 * sigma * std::sqrt(2.0 * std::log(static_cast<double>(n)));
}

CsbmSample sample_csbm(const CsbmParams& params, CsbmSampleOptions options) {
  Rng rng(params.seed);
  return sample_csbm(params, rng, options);
}

CsbmSample sample_csbm(const CsbmParams& params, Rng& rng, CsbmSampleOptions options) {
  params.validate();
  const std::size_t n = params.n;
  const std::size_t d = params.feature_dim();

  CsbmSample out;
  out.params = params;
  out.params.d = d;
  out.eps.resize(n);
  if (options.stratified_classes) {
    for (std::size_t i = 0; i < n; ++i) out.eps[i] = static_cast<std::int8_t>(static_cast<int>(i % 3) - 1);
    for (std::size_t k = n; k > 1; --k) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(k - 1)));
      std::swap(out.eps[k - 1], out.eps[j]);
    }
  } else {
    for (auto& e : out.eps) e = static_cast<std::int8_t>(rng.uniform_int(-1, 1));
  }
  out.task_labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.task_labels[i] = out.eps[i] == 0 ? 1 : 0;

  // Strict upper triangle, row by row, one Bernoulli draw per pair.
  const bool p_all = params.p >= 1.0, q_all = params.q >= 1.0;
  const std::uint64_t tp = bernoulli_threshold(params.p), tq = bernoulli_threshold(params.q);
  std::vector<EdgeOffset> upper_offsets(n + 1, 0);
  std::vector<NodeId> upper_cols;
  upper_cols.reserve(static_cast<std::size_t>(
      static_cast<double>(n) * static_cast<double>(n) * (params.p + 2.0 * params.q) / 6.0 * 1.05) + 16);
  auto& eng = rng.engine();
  std::vector<NodeId> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ei = out.eps[i];
    std::size_t k = 0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool same = out.eps[j] == ei;
      const std::uint64_t t = same ? tp : tq;
      const bool all = same ? p_all : q_all;
      row[k] = static_cast<NodeId>(j);
      k += static_cast<std::size_t>((eng() < t) | all);
    }
    upper_cols.insert(upper_cols.end(), row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k));
    upper_offsets[i + 1] = static_cast<EdgeOffset>(upper_cols.size());
  }
  out.graph = Graph::from_upper_triangle(n, upper_offsets, upper_cols);
  upper_cols.clear();
  upper_cols.shrink_to_fit();

  out.mu.assign(d, params.mu_norm / std::sqrt(static_cast<double>(d)));
  out.features = FeatureMatrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = out.features.row(i);
    const double e = out.eps[i];
    for (std::size_t c = 0; c < d; ++c) row[c] = e * out.mu[c] + params.sigma * rng.normal();
  }
  return out;
}

SeparabilityThresholds separability_thresholds(const CsbmParams& params) {
  if (params.n < 2) throw DomainError("separability_thresholds: n must be >= 2");
  const double ln = std::log(static_cast<double>(params.n));
  SeparabilityThresholds t;
  t.gat = params.sigma * std::sqrt(ln);
  const double gap = params.p - params.q;
  if (gap == 0.0) {
    t.cat = std::numeric_limits<double>::infinity();
  } else {
    t.cat = params.sigma * std::sqrt((params.p + 2.0 * params.q) * ln / (static_cast<double>(params.n) * gap * gap));
  }
  return t;
}

ConcentrationReport concentration_report(const CsbmSample& sample) {
  const auto& g = sample.graph;
  const std::size_t n = g.num_nodes();
  const double p = sample.params.p, q = sample.params.q;
  const double ln = std::log(static_cast<double>(n));
  ConcentrationReport r;
  for (auto e : sample.eps) ++r.class_sizes[static_cast<std::size_t>(e + 1)];
  r.expected_degree = static_cast<double>(n) * (p + 2.0 * q) / 3.0;
  r.relative_band = 10.0 / std::sqrt(ln);
  r.expected_intra_ratio = (p + 2.0 * q) > 0 ? p / (p + 2.0 * q) : 0.0;
  r.expected_inter_ratio = (p + 2.0 * q) > 0 ? q / (p + 2.0 * q) : 0.0;

  const double size_tol = std::sqrt(static_cast<double>(n) * ln);
  r.class_sizes_concentrated = std::ranges::all_of(r.class_sizes, [&](std::size_t s) {
    return std::abs(static_cast<double>(s) - static_cast<double>(n) / 3.0) <= size_tol;
  });

  r.min_degree = std::numeric_limits<std::size_t>::max();
  r.degrees_concentrated = true;
  r.neighbor_counts_concentrated = true;
  double deg_sum = 0.0, intra_sum = 0.0, inter_sum = 0.0;
  std::size_t inter_terms = 0, nonisolated = 0;
  const double band = r.relative_band;
  for (std::size_t i = 0; i < n; ++i) {
    std::array<std::size_t, 3> counts{};
    std::size_t deg = 0;
    for (NodeId j : g.neighbors(i)) {
      if (static_cast<std::size_t>(j) == i) continue;
      ++deg;
      ++counts[static_cast<std::size_t>(sample.eps[static_cast<std::size_t>(j)] + 1)];
    }
    r.min_degree = std::min(r.min_degree, deg);
    r.max_degree = std::max(r.max_degree, deg);
    deg_sum += static_cast<double>(deg);
    if (std::abs(static_cast<double>(deg) - r.expected_degree) > band * r.expected_degree) r.degrees_concentrated = false;
    if (deg == 0) continue;
    ++nonisolated;
    const auto own = static_cast<std::size_t>(sample.eps[i] + 1);
    for (std::size_t k = 0; k < 3; ++k) {
      const double ratio = static_cast<double>(counts[k]) / static_cast<double>(deg);
      const double expected = k == own ? r.expected_intra_ratio : r.expected_inter_ratio;
      if (std::abs(ratio - expected) > band * expected) r.neighbor_counts_concentrated = false;
      if (k == own) intra_sum += ratio;
      else {
        inter_sum += ratio;
        ++inter_terms;
      }
    }
  }
  if (n == 0) r.min_degree = 0;
  r.mean_degree = n ? deg_sum / static_cast<double>(n) : 0.0;
  r.mean_intra_ratio = nonisolated ? intra_sum / static_cast<double>(nonisolated) : 0.0;
  r.mean_inter_ratio = inter_terms ? inter_sum / static_cast<double>(inter_terms) : 0.0;
  return r;
}

LabelledDataset to_dataset(const CsbmSample& sample) {
  LabelledDataset data;
  data.graph = sample.graph;
  data.features = sample.features;
  data.labels.assign(sample.task_labels.begin(), sample.task_labels.end());
  data.num_classes = 2;
  data.train_mask.assign(sample.eps.size(), 0);
  data.val_mask.assign(sample.eps.size(), 0);
  data.test_mask.assign(sample.eps.size(), 0);
  return data;
}

std::filesystem::path save_csbm(const CsbmSample& sample, const LabelledDataset& data,
                                const std::filesystem::path& dir, const std::string& stem) {
  auto manifest = save_dataset(data, dir, stem);
  nlohmann::json side = {
      {"n", sample.params.n},         {"p", sample.params.p},         {"q", sample.params.q},
      {"mu_norm", sample.params.mu_norm}, {"sigma", sample.params.sigma}, {"d", sample.params.feature_dim()},
      {"seed", sample.params.seed}};
  std::vector<int> eps(sample.eps.begin(), sample.eps.end());
  side["eps"] = eps;
  const auto path = dir / (stem + ".csbm.json");
  std::ofstream out(path);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  out << side.dump() << '\n';
  return manifest;
}

}  // namespace lcat

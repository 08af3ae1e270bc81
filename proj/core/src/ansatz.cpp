#include "lcat/ansatz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lcat/error.hpp"
#include "lcat/transforms.hpp"
#include "ansatz_kernel.hpp"

namespace lcat {
namespace {

inline double leaky(double z, double beta) noexcept { return z >= 0.0 ? z : beta * z; }

int group_of(std::int8_t ei, std::int8_t ej) noexcept {
  if (ei == ej && ei >= 0) return 0;
  if (ei == -1 && ej == 1) return 1;
  return 2;
}

// Row-wise softmax over ansatz scores. Calls emit(i, entry_begin, gammas) per row.
template <typename Emit>
void for_each_gamma_row(const Graph& g, std::span<const double> x, const AnsatzParams& a, Emit&& emit) {
  std::vector<double> buf;
  const auto c = detail::AnsatzCoeffs::from(a.mu_norm, a.R, a.C, a.beta);
  detail::ansatz_softmax_rows(g, x.data(), c, 1.0, buf, std::forward<Emit>(emit));
}

}  // namespace

AnsatzParams build_ansatz(std::span<const double> mu, double R, double C, double beta) {
  double norm = 0.0;
  for (double v : mu) norm += v * v;
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) throw DomainError("build_ansatz: mu must be non-zero");
  if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("build_ansatz: slope must lie in [0, 1]");
  AnsatzParams a;
  a.w_tilde.resize(mu.size());
  for (std::size_t k = 0; k < mu.size(); ++k) a.w_tilde[k] = mu[k] / norm;
  a.mu_norm = norm;
  a.R = R;
  a.C = C;
  a.beta = beta;
  for (std::size_t t = 0; t < 8; ++t) {
    a.b[t] = norm * C * AnsatzParams::kBiasPattern[t];
    a.r[t] = R * AnsatzParams::kOutputPattern[t];
  }
  return a;
}

double ansatz_score_projected(const AnsatzParams& a, double x_i, double x_j) noexcept {
  double s = 0.0;
  for (std::size_t t = 0; t < 8; ++t) {
    const auto& row = AnsatzParams::kSigns[t];
    s += a.r[t] * leaky(row[0] * x_i + row[1] * x_j + a.b[t], a.beta);
  }
  return s;
}

double ansatz_score(const AnsatzParams& a, std::span<const double> h_i, std::span<const double> h_j) {
  if (h_i.size() != a.w_tilde.size() || h_j.size() != a.w_tilde.size())
    throw ShapeError("ansatz_score: feature width does not match w_tilde");
  double xi = 0.0, xj = 0.0;
  for (std::size_t k = 0; k < h_i.size(); ++k) {
    xi += a.w_tilde[k] * h_i[k];
    xj += a.w_tilde[k] * h_j[k];
  }
  return ansatz_score_projected(a, xi, xj);
}

std::span<const double> EdgeWeights::row(std::size_t i) const {
  const auto off = graph.row_offsets();
  return {values.data() + off[i], static_cast<std::size_t>(off[i + 1] - off[i])};
}

double EdgeWeights::at(std::size_t i, std::size_t j) const {
  auto nb = graph.neighbors(i);
  auto it = std::lower_bound(nb.begin(), nb.end(), static_cast<NodeId>(j));
  if (it == nb.end() || *it != static_cast<NodeId>(j)) return 0.0;
  return values[static_cast<std::size_t>(graph.row_offsets()[i]) + static_cast<std::size_t>(it - nb.begin())];
}

std::vector<double> project_rows(const FeatureMatrix& x, std::span<const double> w) {
  if (x.cols() != w.size()) throw ShapeError("project_rows: width " + std::to_string(x.cols()) + " vs " + std::to_string(w.size()));
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    double s = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) s += r[k] * w[k];
    out[i] = s;
  }
  return out;
}

EdgeWeights attention_gammas_projected(const Graph& graph, std::span<const double> x, const AnsatzParams& ansatz) {
  if (!graph.has_self_loops()) throw GraphError("attention_gammas: graph must carry self-loops");
  if (x.size() != graph.num_nodes()) throw ShapeError("attention_gammas: input length does not match node count");
  EdgeWeights w{graph, std::vector<double>(graph.num_entries())};
  for_each_gamma_row(graph, x, ansatz, [&](std::size_t, std::size_t begin, std::span<const double> gam) {
    std::copy(gam.begin(), gam.end(), w.values.begin() + static_cast<std::ptrdiff_t>(begin));
  });
  return w;
}

EdgeWeights attention_gammas(const Graph& graph, const FeatureMatrix& h, const AnsatzParams& ansatz) {
  if (h.rows() != graph.num_nodes()) throw ShapeError("attention_gammas: feature rows do not match node count");
  return attention_gammas_projected(graph, project_rows(h, ansatz.w_tilde), ansatz);
}

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kGCN: return "GCN";
    case EstimatorKind::kGAT: return "GAT";
    case EstimatorKind::kCAT: return "CAT";
  }
  return "?";
}

EstimatorKind parse_estimator_kind(std::string_view s) {
  if (s == "GCN") return EstimatorKind::kGCN;
  if (s == "GAT") return EstimatorKind::kGAT;
  if (s == "CAT") return EstimatorKind::kCAT;
  throw ConfigError("unknown estimator model '" + std::string(s) + "' (expected GCN, GAT or CAT)");
}

EstimatorMode EstimatorMode::defaults(EstimatorKind kind, double p, double q) {
  switch (kind) {
    case EstimatorKind::kGCN: return {kind, 0.0, kDefaultAnsatzSlope};
    case EstimatorKind::kGAT: return {kind, 1.0, kDefaultAnsatzSlope};
    case EstimatorKind::kCAT:
      if (p == q) throw DomainError("CAT estimator needs p != q");
      return {kind, (p - q) / (p + 2.0 * q), kDefaultAnsatzSlope};
  }
  throw DomainError("unknown estimator kind");
}

EstimateResult estimate_and_classify(const CsbmSample& sample, const EstimatorMode& mode, double R,
                                     EstimateOptions options) {
  const auto& g = sample.graph;
  const std::size_t n = g.num_nodes();
  if (mode.kind == EstimatorKind::kCAT && sample.params.p == sample.params.q)
    throw DomainError("CAT estimator needs p != q");
  double mu_norm = 0.0;
  for (double v : sample.mu) mu_norm += v * v;
  mu_norm = std::sqrt(mu_norm);
  if (!(mu_norm > 0.0)) throw DomainError("estimate_and_classify: |mu| must be > 0");
  if (R <= 0.0) R = 7.0 / mu_norm;

  std::vector<double> w(sample.mu.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = sample.mu[k] / mu_norm;
  const std::vector<double> x = project_rows(sample.features, w);

  EstimateResult res;
  res.logits.assign(n, 0.0);
  const double offset = mode.C * mu_norm / 2.0;
  std::array<double, 3> gsum{};
  std::array<std::size_t, 3> gcount{};
  const auto cols = g.col_indices();

  if (mode.kind == EstimatorKind::kGCN) {
    for (std::size_t i = 0; i < n; ++i) {
      auto nb = g.neighbors(i);
      double s = 0.0;
      for (NodeId j : nb) s += x[static_cast<std::size_t>(j)];
      const double gamma = 1.0 / static_cast<double>(nb.size());
      res.logits[i] = s * gamma - offset;
      if (options.gamma_groups)
        for (NodeId j : nb) {
          const int grp = group_of(sample.eps[i], sample.eps[static_cast<std::size_t>(j)]);
          gsum[grp] += gamma;
          ++gcount[grp];
        }
    }
  } else {
    const AnsatzParams ansatz = build_ansatz(sample.mu, R, mode.C, mode.beta);
    std::vector<double> score_input;
    if (mode.kind == EstimatorKind::kCAT) {
      FeatureMatrix col = Matrix::column(x);
      score_input = neighborhood_mean(g, col, 1.0).values();
    } else {
      score_input = x;
    }
    for_each_gamma_row(g, score_input, ansatz, [&](std::size_t i, std::size_t begin, std::span<const double> gam) {
      double s = 0.0;
      for (std::size_t k = 0; k < gam.size(); ++k) {
        const auto j = static_cast<std::size_t>(cols[begin + k]);
        s += gam[k] * x[j];
        if (options.gamma_groups) {
          const int grp = group_of(sample.eps[i], sample.eps[j]);
          gsum[grp] += gam[k];
          ++gcount[grp];
        }
      }
      res.logits[i] = s - offset;
    });
  }

  res.predicted_c0.resize(n);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    res.predicted_c0[i] = res.logits[i] < 0.0 ? 1 : 0;
    correct += res.predicted_c0[i] == sample.task_labels[i];
  }
  res.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  if (options.gamma_groups) {
    GammaGroupMeans gm;
    for (int k = 0; k < 3; ++k) {
      gm.count[k] = gcount[k];
      if (gcount[k] > 0) gm.mean[k] = gsum[k] / static_cast<double>(gcount[k]);
    }
    res.gamma_groups = gm;
  }
  return res;
}

GammaGroupMeans gamma_group_summary(const EdgeWeights& gammas, std::span<const std::int8_t> eps) {
  const auto& g = gammas.graph;
  if (eps.size() != g.num_nodes()) throw ShapeError("gamma_group_summary: eps length does not match node count");
  std::array<double, 3> sum{};
  GammaGroupMeans out;
  const auto off = g.row_offsets();
  const auto cols = g.col_indices();
  for (std::size_t i = 0; i < g.num_nodes(); ++i)
    for (auto e = static_cast<std::size_t>(off[i]); e < static_cast<std::size_t>(off[i + 1]); ++e) {
      const int grp = group_of(eps[i], eps[static_cast<std::size_t>(cols[e])]);
      sum[grp] += gammas.values[e];
      ++out.count[grp];
    }
  for (int k = 0; k < 3; ++k)
    if (out.count[k] > 0) out.mean[k] = sum[k] / static_cast<double>(out.count[k]);
  return out;
}

}  // namespace lcat

#include "lcat/transforms.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "lcat/error.hpp"

namespace lcat {

FeatureMatrix neighborhood_mean(const Graph& graph, const FeatureMatrix& h, double lambda2) {
  if (!graph.has_self_loops()) throw GraphError("neighborhood_mean: graph must carry self-loops");
  if (h.rows() != graph.num_nodes()) {
    throw ShapeError("neighborhood_mean: features have " + std::to_string(h.rows()) +
                     " rows, graph has " + std::to_string(graph.num_nodes()) + " nodes");
  }
  const std::size_t d = h.cols();
  FeatureMatrix out(h.rows(), d);
  std::vector<double> acc(d);
  for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    std::size_t others = 0;
    for (NodeId j : graph.neighbors(i)) {
      if (static_cast<std::size_t>(j) == i) continue;
      ++others;
      auto hj = h.row(static_cast<std::size_t>(j));
      for (std::size_t c = 0; c < d; ++c) acc[c] += hj[c];
    }
    const double denom = 1.0 + lambda2 * static_cast<double>(others);
    auto hi = h.row(i);
    auto oi = out.row(i);
    for (std::size_t c = 0; c < d; ++c) oi[c] = (hi[c] + lambda2 * acc[c]) / denom;
  }
  return out;
}

FeatureMatrix inject_feature_noise(const FeatureMatrix& h, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw DomainError("inject_feature_noise: sigma must be >= 0, got " + std::to_string(sigma));
  FeatureMatrix out = h;
  if (sigma == 0.0) return out;
  for (double& v : out.data()) v += sigma * rng.normal();
  return out;
}

Graph inject_edge_noise(const Graph& graph, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("inject_edge_noise: p must lie in [0, 1], got " + std::to_string(p));
  const std::size_t n = graph.num_nodes();
  std::vector<Edge> edges = graph.upper_edges();
  if (!graph.undirected()) {
    // Keep directed entries as given; symmetrization below preserves them.
    edges.clear();
    for (std::size_t i = 0; i < n; ++i)
      for (NodeId j : graph.neighbors(i))
        if (static_cast<std::size_t>(j) != i) edges.emplace_back(static_cast<NodeId>(i), j);
  }
  if (p > 0.0 && n > 1) {
    if (n <= kEdgeNoiseDenseLimit) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
          if (graph.has_edge(i, j) || graph.has_edge(j, i)) continue;
          if (rng.bernoulli(p)) edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
        }
    } else {
      // Walk the strict upper triangle in row-major order; existing edges are
      // skipped when landed on, so only absent pairs are ever added.
      const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
      std::uint64_t pos = 0;
      std::size_t i = 0;
      std::uint64_t row_start = 0;  // linear index of pair (i, i+1)
      while (true) {
        const std::uint64_t skip = rng.geometric_skip(p);
        if (skip >= total - pos) break;
        pos += skip;
        while (pos >= row_start + (n - 1 - i)) {
          row_start += n - 1 - i;
          ++i;
        }
        const std::size_t j = i + 1 + static_cast<std::size_t>(pos - row_start);
        if (!graph.has_edge(i, j) && !graph.has_edge(j, i))
          edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
        ++pos;
        if (pos >= total) break;
      }
    }
  }
  return Graph::from_edge_list(edges, n, {.symmetrize = true, .add_self_loops = graph.has_self_loops()});
}

}  // namespace lcat

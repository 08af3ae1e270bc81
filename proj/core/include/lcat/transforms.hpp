#pragma once

#include "lcat/graph.hpp"
#include "lcat/matrix.hpp"
#include "lcat/rng.hpp"

namespace lcat {

/// Interpolated neighborhood mean
///   out_i = (h_i + lambda2 * sum_{l in N_i} h_l) / (1 + lambda2 * |N_i|),
/// where N_i excludes i. lambda2 = 0 returns H, lambda2 = 1 the uniform mean
/// over N*_i. Requires a graph with self-loops.
FeatureMatrix neighborhood_mean(const Graph& graph, const FeatureMatrix& h, double lambda2);

/// H + G with G_ij ~ N(0, sigma^2) i.i.d.
FeatureMatrix inject_feature_noise(const FeatureMatrix& h, double sigma, Rng& rng);

/// Adds every absent pair i < j independently with probability p and keeps all
/// existing edges. Small graphs use per-pair Bernoulli draws; above
/// kEdgeNoiseDenseLimit nodes a geometric skip over the pair index gives the
/// same distribution in O(n + added) draws.
Graph inject_edge_noise(const Graph& graph, double p, Rng& rng);

inline constexpr std::size_t kEdgeNoiseDenseLimit = 5000;

}  // namespace lcat

#include <algorithm>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "lcat/error.hpp"
#include "lcat/graph.hpp"
#include "test_support.hpp"

using namespace lcat;

namespace {

void expect_csr_invariants(const Graph& g) {
  const auto off = g.row_offsets();
  ASSERT_EQ(off.size(), g.num_nodes() + 1);
  EXPECT_EQ(off[0], 0);
  EXPECT_EQ(static_cast<std::size_t>(off.back()), g.col_indices().size());
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    EXPECT_LE(off[i], off[i + 1]);
    const auto row = g.neighbors(i);
    for (std::size_t k = 1; k < row.size(); ++k) EXPECT_LT(row[k - 1], row[k]);
    if (g.has_self_loops()) {
      EXPECT_TRUE(std::binary_search(row.begin(), row.end(), static_cast<NodeId>(i)));
      EXPECT_GE(g.degree(i), 1u);
    }
    if (g.undirected())
      for (NodeId j : row) EXPECT_TRUE(g.has_edge(static_cast<std::size_t>(j), i));
  }
}

}  // namespace

TEST(Graph, TriangleWithSelfLoopsHasThreeEntriesPerRow) {
  const std::vector<Edge> edges{{0, 1}, {1, 2}, {0, 2}};
  const Graph g = Graph::from_edge_list(edges, 3, {.symmetrize = true, .add_self_loops = true});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(g.degree(i), 3u);
  EXPECT_EQ(g.num_entries(), 9u);
  EXPECT_EQ(g.num_undirected_edges(), 3u);
  expect_csr_invariants(g);
}

TEST(Graph, EmptyEdgeListKeepsOnlySelfLoops) {
  const Graph g = Graph::from_edge_list({}, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    ASSERT_EQ(g.degree(i), 1u);
    EXPECT_EQ(g.neighbors(i)[0], static_cast<NodeId>(i));
  }
}

TEST(Graph, MatchesDenseAdjacencyOracle) {
  Rng rng(7);
  const std::size_t n = 30;
  std::vector<Edge> edges;
  std::vector<std::vector<int>> dense(n, std::vector<int>(n, 0));
  for (int k = 0; k < 200; ++k) {
    const auto i = static_cast<NodeId>(rng.uniform_int(0, n - 1));
    const auto j = static_cast<NodeId>(rng.uniform_int(0, n - 1));
    edges.emplace_back(i, j);
    dense[i][j] = dense[j][i] = 1;
  }
  for (std::size_t i = 0; i < n; ++i) dense[i][i] = 1;
  const Graph g = Graph::from_edge_list(edges, n);
  EXPECT_EQ(fx::dense_adjacency(g), dense);
  expect_csr_invariants(g);
}

TEST(Graph, DuplicatesAreCollapsedAndSelfLoopsAddedOnce) {
  const std::vector<Edge> edges{{0, 1}, {1, 0}, {0, 1}, {2, 2}, {2, 2}};
  const Graph g = Graph::from_edge_list(edges, 3);
  EXPECT_EQ(g.degree(0), 2u);
  EXPECT_EQ(g.degree(1), 2u);
  EXPECT_EQ(g.degree(2), 1u);
}

TEST(Graph, DirectedWithoutLoopsKeepsOrientation) {
  const std::vector<Edge> edges{{0, 1}, {2, 1}};
  const Graph g = Graph::from_edge_list(edges, 3, {.symmetrize = false, .add_self_loops = false});
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_FALSE(g.has_edge(1, 0));
  EXPECT_FALSE(g.has_self_loops());
  EXPECT_EQ(g.degree(1), 0u);
}

TEST(Graph, OutOfRangeEdgeNamesTheEdge) {
  const std::vector<Edge> edges{{0, 1}, {1, 5}};
  try {
    (void)Graph::from_edge_list(edges, 3);
    FAIL() << "expected GraphError";
  } catch (const GraphError& e) {
    EXPECT_NE(std::string(e.what()).find("(1, 5)"), std::string::npos) << e.what();
  }
  const std::vector<Edge> negative{{-1, 0}};
  EXPECT_THROW((void)Graph::from_edge_list(negative, 3), GraphError);
}

TEST(Graph, FromCsrRejectsBrokenInvariants) {
  EXPECT_THROW((void)Graph::from_csr({0, 2, 3}, {1, 0, 1}, false, false), GraphError);  // row 0 unsorted
  EXPECT_THROW((void)Graph::from_csr({0, 1, 2}, {0, 0}, true, false), GraphError);      // row 1 lacks self-loop
  EXPECT_THROW((void)Graph::from_csr({0, 2, 3}, {0, 1, 1}, true, true), GraphError);    // (0,1) without (1,0)
  EXPECT_THROW((void)Graph::from_csr({0, 1, 3}, {0, 0}, false, false), GraphError);     // offsets vs size
  const Graph ok = Graph::from_csr({0, 2, 4}, {0, 1, 0, 1}, true, true);
  EXPECT_EQ(ok.num_entries(), 4u);
}

TEST(Graph, UpperTriangleBuilderMatchesEdgeList) {
  Rng rng(3);
  const Graph ref = fx::random_graph(25, 0.2, rng);
  const std::size_t n = ref.num_nodes();
  std::vector<EdgeOffset> off{0};
  std::vector<NodeId> cols;
  for (std::size_t i = 0; i < n; ++i) {
    for (NodeId j : ref.neighbors(i))
      if (static_cast<std::size_t>(j) > i) cols.push_back(j);
    off.push_back(static_cast<EdgeOffset>(cols.size()));
  }
  EXPECT_EQ(Graph::from_upper_triangle(n, off, cols), ref);
}

TEST(Graph, EntryRowsAndUpperEdgesAreConsistent) {
  Rng rng(11);
  const Graph g = fx::random_graph(15, 0.3, rng);
  const auto rows = g.entry_rows();
  ASSERT_EQ(rows.size(), g.num_entries());
  for (std::size_t i = 0; i < g.num_nodes(); ++i)
    for (auto e = g.row_offsets()[i]; e < g.row_offsets()[i + 1]; ++e) EXPECT_EQ(rows[e], static_cast<NodeId>(i));
  const auto upper = g.upper_edges();
  EXPECT_EQ(upper.size(), g.num_undirected_edges());
  for (auto [i, j] : upper) EXPECT_LT(i, j);
}

TEST(GraphProperty, PermuteThenBuildEqualsBuildThenPermute) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const std::size_t n = 5 + static_cast<std::size_t>(rng.uniform_int(0, 15));
    std::vector<Edge> edges;
    for (int k = 0; k < 40; ++k)
      edges.emplace_back(static_cast<NodeId>(rng.uniform_int(0, n - 1)), static_cast<NodeId>(rng.uniform_int(0, n - 1)));
    std::vector<NodeId> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    std::vector<Edge> relabelled;
    for (auto [i, j] : edges) relabelled.emplace_back(perm[i], perm[j]);
    EXPECT_EQ(Graph::from_edge_list(relabelled, n), Graph::from_edge_list(edges, n).permuted(perm)) << "seed " << seed;
  }
}

TEST(GraphProperty, RandomGraphsSatisfyCsrInvariants) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    expect_csr_invariants(fx::random_graph(30, 0.15, rng));
  }
}

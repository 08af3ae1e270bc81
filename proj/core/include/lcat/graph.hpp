#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace lcat {

using NodeId = std::int32_t;
using EdgeOffset = std::int64_t;
using Edge = std::pair<NodeId, NodeId>;

struct GraphBuildOptions {
  bool symmetrize = true;
  bool add_self_loops = true;
};

/// Immutable CSR adjacency. Row i lists N*_i (N_i plus i itself when the graph
/// carries self-loops) in strictly increasing order. Copies share storage.
class Graph {
 public:
  Graph() = default;

  /// Deduplicated, sorted CSR from an arbitrary edge list. Throws GraphError
  /// naming the first edge with an endpoint outside [0, n).
  static Graph from_edge_list(std::span<const Edge> edges, std::size_t n,
                              GraphBuildOptions options = {});

  /// Adopts CSR arrays after validating every invariant.
  static Graph from_csr(std::vector<EdgeOffset> row_offsets, std::vector<NodeId> col_indices,
                        bool has_self_loops, bool undirected);

  /// Builds a symmetric graph with self-loops from the strict upper triangle:
  /// `upper_offsets`/`upper_cols` list, for each i, the neighbors j > i in
  /// increasing order. Runs in O(n + E) with no sorting.
  static Graph from_upper_triangle(std::size_t n, const std::vector<EdgeOffset>& upper_offsets,
                                   const std::vector<NodeId>& upper_cols);

  [[nodiscard]] std::size_t num_nodes() const noexcept;
  /// Stored entries, self-loops included.
  [[nodiscard]] std::size_t num_entries() const noexcept;
  /// Undirected edges excluding self-loops (requires undirected()).
  [[nodiscard]] std::size_t num_undirected_edges() const noexcept;

  [[nodiscard]] std::span<const NodeId> neighbors(std::size_t i) const noexcept;
  [[nodiscard]] std::size_t degree(std::size_t i) const noexcept;
  [[nodiscard]] bool has_edge(std::size_t i, std::size_t j) const noexcept;

  [[nodiscard]] bool has_self_loops() const noexcept;
  [[nodiscard]] bool undirected() const noexcept;

  [[nodiscard]] std::span<const EdgeOffset> row_offsets() const noexcept;
  [[nodiscard]] std::span<const NodeId> col_indices() const noexcept;

  /// Row index of every stored entry (the "receiver" i of entry (i, j)).
  [[nodiscard]] std::vector<NodeId> entry_rows() const;

  /// Edge list of the undirected graph, i < j, self-loops excluded.
  [[nodiscard]] std::vector<Edge> upper_edges() const;

  /// Relabels node i as perm[i].
  [[nodiscard]] Graph permuted(std::span<const NodeId> perm) const;

  friend bool operator==(const Graph& a, const Graph& b);

 private:
  struct Storage {
    std::vector<EdgeOffset> row_offsets{0};
    std::vector<NodeId> col_indices;
    bool has_self_loops = false;
    bool undirected = false;
  };
  explicit Graph(std::shared_ptr<const Storage> s) : storage_(std::move(s)) {}
  static const Storage& empty_storage();
  [[nodiscard]] const Storage& s() const noexcept { return storage_ ? *storage_ : empty_storage(); }

  std::shared_ptr<const Storage> storage_;
};

}  // namespace lcat

#include "lcat/graph.hpp"

#include <algorithm>
#include <string>

#include "lcat/error.hpp"

namespace lcat {

const Graph::Storage& Graph::empty_storage() {
  static const Storage empty{};
  return empty;
}

Graph Graph::from_edge_list(std::span<const Edge> edges, std::size_t n, GraphBuildOptions options) {
  const auto nn = static_cast<std::int64_t>(n);
  for (const auto& [i, j] : edges) {
    if (i < 0 || j < 0 || i >= nn || j >= nn) {
      throw GraphError("edge (" + std::to_string(i) + ", " + std::to_string(j) +
                       ") out of range for n=" + std::to_string(n));
    }
  }
  std::vector<EdgeOffset> offsets(n + 1, 0);
  for (const auto& [i, j] : edges) {
    ++offsets[static_cast<std::size_t>(i) + 1];
    if (options.symmetrize && i != j) ++offsets[static_cast<std::size_t>(j) + 1];
  }
  if (options.add_self_loops)
    for (std::size_t i = 0; i < n; ++i) ++offsets[i + 1];
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];

  std::vector<NodeId> cols(static_cast<std::size_t>(offsets[n]));
  std::vector<EdgeOffset> cursor(offsets.begin(), offsets.end() - 1);
  for (const auto& [i, j] : edges) {
    cols[static_cast<std::size_t>(cursor[static_cast<std::size_t>(i)]++)] = j;
    if (options.symmetrize && i != j) cols[static_cast<std::size_t>(cursor[static_cast<std::size_t>(j)]++)] = i;
  }
  if (options.add_self_loops)
    for (std::size_t i = 0; i < n; ++i) cols[static_cast<std::size_t>(cursor[i]++)] = static_cast<NodeId>(i);

  // Sort and deduplicate each row, compacting in place.
  std::vector<EdgeOffset> compact(n + 1, 0);
  EdgeOffset write = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto first = cols.begin() + offsets[i];
    auto last = cols.begin() + offsets[i + 1];
    std::sort(first, last);
    auto uend = std::unique(first, last);
    for (auto it = first; it != uend; ++it) cols[static_cast<std::size_t>(write++)] = *it;
    compact[i + 1] = write;
  }
  cols.resize(static_cast<std::size_t>(write));
  cols.shrink_to_fit();

  bool undirected = options.symmetrize;
  auto storage = std::make_shared<Storage>();
  storage->row_offsets = std::move(compact);
  storage->col_indices = std::move(cols);
  storage->has_self_loops = options.add_self_loops;
  storage->undirected = undirected;
  if (!undirected) {
    // A directed input that happens to be symmetric is still undirected.
    Graph probe(storage);
    bool sym = true;
    for (std::size_t i = 0; i < n && sym; ++i)
      for (NodeId j : probe.neighbors(i))
        if (!probe.has_edge(static_cast<std::size_t>(j), i)) { sym = false; break; }
    storage->undirected = sym;
  }
  if (!options.add_self_loops) {
    Graph probe(storage);
    bool loops = n > 0;
    for (std::size_t i = 0; i < n && loops; ++i) loops = probe.has_edge(i, i);
    storage->has_self_loops = loops;
  }
  return Graph(std::move(storage));
}

Graph Graph::from_csr(std::vector<EdgeOffset> row_offsets, std::vector<NodeId> col_indices,
                      bool has_self_loops, bool undirected) {
  if (row_offsets.empty() || row_offsets.front() != 0) throw GraphError("from_csr: row_offsets must start at 0");
  const std::size_t n = row_offsets.size() - 1;
  if (row_offsets.back() != static_cast<EdgeOffset>(col_indices.size()))
    throw GraphError("from_csr: row_offsets[n] != number of column indices");
  for (std::size_t i = 0; i < n; ++i) {
    if (row_offsets[i + 1] < row_offsets[i]) throw GraphError("from_csr: decreasing row_offsets at row " + std::to_string(i));
    for (EdgeOffset e = row_offsets[i]; e < row_offsets[i + 1]; ++e) {
      const NodeId j = col_indices[static_cast<std::size_t>(e)];
      if (j < 0 || static_cast<std::size_t>(j) >= n)
        throw GraphError("from_csr: column " + std::to_string(j) + " out of range in row " + std::to_string(i));
      if (e > row_offsets[i] && col_indices[static_cast<std::size_t>(e - 1)] >= j)
        throw GraphError("from_csr: row " + std::to_string(i) + " not strictly increasing");
    }
  }
  auto storage = std::make_shared<Storage>();
  storage->row_offsets = std::move(row_offsets);
  storage->col_indices = std::move(col_indices);
  storage->has_self_loops = has_self_loops;
  storage->undirected = undirected;
  Graph g(std::move(storage));
  for (std::size_t i = 0; i < n; ++i) {
    if (has_self_loops && !g.has_edge(i, i))
      throw GraphError("from_csr: row " + std::to_string(i) + " lacks its self-loop");
    if (undirected)
      for (NodeId j : g.neighbors(i))
        if (!g.has_edge(static_cast<std::size_t>(j), i))
          throw GraphError("from_csr: edge (" + std::to_string(i) + ", " + std::to_string(j) + ") has no reverse");
  }
  return g;
}

Graph Graph::from_upper_triangle(std::size_t n, const std::vector<EdgeOffset>& upper_offsets,
                                 const std::vector<NodeId>& upper_cols) {
  if (upper_offsets.size() != n + 1) throw GraphError("from_upper_triangle: offsets size mismatch");
  std::vector<EdgeOffset> lower_count(n, 0);
  for (NodeId j : upper_cols) ++lower_count[static_cast<std::size_t>(j)];

  std::vector<EdgeOffset> offsets(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i)
    offsets[i + 1] = offsets[i] + lower_count[i] + 1 + (upper_offsets[i + 1] - upper_offsets[i]);

  std::vector<NodeId> cols(static_cast<std::size_t>(offsets[n]));
  std::vector<EdgeOffset> cursor(offsets.begin(), offsets.end() - 1);
  // Rows are visited in increasing order, so lower-triangle entries of each
  // row arrive sorted; the self-loop and upper part follow them.
  for (std::size_t i = 0; i < n; ++i) {
    auto& c = cursor[i];
    c = offsets[i] + lower_count[i];
    cols[static_cast<std::size_t>(c++)] = static_cast<NodeId>(i);
    for (EdgeOffset e = upper_offsets[i]; e < upper_offsets[i + 1]; ++e) {
      const NodeId j = upper_cols[static_cast<std::size_t>(e)];
      cols[static_cast<std::size_t>(c++)] = j;
    }
  }
  std::vector<EdgeOffset> lower_cursor(offsets.begin(), offsets.end() - 1);
  for (std::size_t i = 0; i < n; ++i)
    for (EdgeOffset e = upper_offsets[i]; e < upper_offsets[i + 1]; ++e) {
      const auto j = static_cast<std::size_t>(upper_cols[static_cast<std::size_t>(e)]);
      cols[static_cast<std::size_t>(lower_cursor[j]++)] = static_cast<NodeId>(i);
    }

  auto storage = std::make_shared<Storage>();
  storage->row_offsets = std::move(offsets);
  storage->col_indices = std::move(cols);
  storage->has_self_loops = true;
  storage->undirected = true;
  return Graph(std::move(storage));
}

std::size_t Graph::num_nodes() const noexcept { return s().row_offsets.size() - 1; }
std::size_t Graph::num_entries() const noexcept { return s().col_indices.size(); }

std::size_t Graph::num_undirected_edges() const noexcept {
  const std::size_t loops = has_self_loops() ? num_nodes() : 0;
  return (num_entries() - loops) / 2;
}

std::span<const NodeId> Graph::neighbors(std::size_t i) const noexcept {
  const auto& st = s();
  const auto b = static_cast<std::size_t>(st.row_offsets[i]);
  const auto e = static_cast<std::size_t>(st.row_offsets[i + 1]);
  return {st.col_indices.data() + b, e - b};
}

std::size_t Graph::degree(std::size_t i) const noexcept {
  const auto& st = s();
  return static_cast<std::size_t>(st.row_offsets[i + 1] - st.row_offsets[i]);
}

bool Graph::has_edge(std::size_t i, std::size_t j) const noexcept {
  if (i >= num_nodes()) return false;
  auto row = neighbors(i);
  return std::binary_search(row.begin(), row.end(), static_cast<NodeId>(j));
}

bool Graph::has_self_loops() const noexcept { return s().has_self_loops; }
bool Graph::undirected() const noexcept { return s().undirected; }
std::span<const EdgeOffset> Graph::row_offsets() const noexcept { return s().row_offsets; }
std::span<const NodeId> Graph::col_indices() const noexcept { return s().col_indices; }

std::vector<NodeId> Graph::entry_rows() const {
  std::vector<NodeId> rows(num_entries());
  const auto off = row_offsets();
  for (std::size_t i = 0; i < num_nodes(); ++i)
    std::fill(rows.begin() + off[i], rows.begin() + off[i + 1], static_cast<NodeId>(i));
  return rows;
}

std::vector<Edge> Graph::upper_edges() const {
  std::vector<Edge> out;
  for (std::size_t i = 0; i < num_nodes(); ++i)
    for (NodeId j : neighbors(i))
      if (static_cast<std::size_t>(j) > i) out.emplace_back(static_cast<NodeId>(i), j);
  return out;
}

Graph Graph::permuted(std::span<const NodeId> perm) const {
  const std::size_t n = num_nodes();
  if (perm.size() != n) throw GraphError("permuted: permutation length mismatch");
  std::vector<Edge> edges;
  edges.reserve(num_entries());
  for (std::size_t i = 0; i < n; ++i)
    for (NodeId j : neighbors(i)) edges.emplace_back(perm[i], perm[static_cast<std::size_t>(j)]);
  return from_edge_list(edges, n, {.symmetrize = false, .add_self_loops = has_self_loops()});
}

bool operator==(const Graph& a, const Graph& b) {
  return a.has_self_loops() == b.has_self_loops() && a.undirected() == b.undirected() &&
         std::ranges::equal(a.row_offsets(), b.row_offsets()) &&
         std::ranges::equal(a.col_indices(), b.col_indices());
}

}  // namespace lcat

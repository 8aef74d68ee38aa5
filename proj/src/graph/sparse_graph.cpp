#include <algorithm>
#include <numeric>

#include "cdgnn/graph.hpp"

namespace cdgnn {

SparseGraph SparseGraph::from_edges(std::size_t n,
                                    std::span<const std::pair<NodeId, NodeId>> edges) {
  std::vector<std::int64_t> counts(n + 1, 0);
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n) {
      throw GraphError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                       ") out of range for n=" + std::to_string(n));
    }
    if (a == b) throw GraphError("self-loop at node " + std::to_string(a));
    ++counts[a + 1];
    ++counts[b + 1];
  }
  std::partial_sum(counts.begin(), counts.end(), counts.begin());
  std::vector<NodeId> cols(static_cast<std::size_t>(counts[n]));
  std::vector<std::int64_t> fill(counts.begin(), counts.end() - 1);
  for (const auto& [a, b] : edges) {
    cols[fill[a]++] = b;
    cols[fill[b]++] = a;
  }

  // Sort and deduplicate each row, compacting in place.
  std::vector<std::int64_t> offsets(n + 1, 0);
  std::int64_t out = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto first = cols.begin() + counts[i];
    auto last = cols.begin() + counts[i + 1];
    std::sort(first, last);
    last = std::unique(first, last);
    for (auto it = first; it != last; ++it) cols[out++] = *it;
    offsets[i + 1] = out;
  }
  cols.resize(static_cast<std::size_t>(out));

  SparseGraph g;
  g.n_ = n;
  g.row_offsets_ = std::move(offsets);
  g.col_indices_ = std::move(cols);
  g.build_edge_list();
  return g;
}

SparseGraph SparseGraph::from_csr(std::size_t n, std::vector<std::int64_t> row_offsets,
                                  std::vector<NodeId> col_indices) {
  if (row_offsets.size() != n + 1 || row_offsets.front() != 0 ||
      row_offsets.back() != static_cast<std::int64_t>(col_indices.size())) {
    throw GraphError("from_csr: inconsistent row offsets");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (row_offsets[i] > row_offsets[i + 1]) throw GraphError("from_csr: offsets decrease");
    for (std::int64_t p = row_offsets[i]; p < row_offsets[i + 1]; ++p) {
      const NodeId c = col_indices[p];
      if (c < 0 || static_cast<std::size_t>(c) >= n) throw GraphError("from_csr: column out of range");
      if (static_cast<std::size_t>(c) == i) throw GraphError("from_csr: self-loop");
      if (p > row_offsets[i] && col_indices[p - 1] >= c) throw GraphError("from_csr: unsorted row");
    }
  }
  SparseGraph g;
  g.n_ = n;
  g.row_offsets_ = std::move(row_offsets);
  g.col_indices_ = std::move(col_indices);
  g.build_edge_list();
  // Symmetry: every (i,j) must have a matching (j,i).
  for (std::size_t i = 0; i < n; ++i)
    for (NodeId j : g.neighbors(static_cast<NodeId>(i)))
      if (!g.has_edge(j, static_cast<NodeId>(i))) throw GraphError("from_csr: asymmetric structure");
  return g;
}

void SparseGraph::build_edge_list() {
  edges_.clear();
  edges_.reserve(col_indices_.size() / 2);
  for (std::size_t i = 0; i < n_; ++i)
    for (NodeId j : neighbors(static_cast<NodeId>(i)))
      if (j > static_cast<NodeId>(i)) edges_.push_back({static_cast<NodeId>(i), j});
}

bool SparseGraph::has_edge(NodeId i, NodeId j) const noexcept {
  if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n_ || static_cast<std::size_t>(j) >= n_)
    return false;
  const auto row = neighbors(i);
  return std::binary_search(row.begin(), row.end(), j);
}

double SparseGraph::average_degree() const noexcept {
  return n_ == 0 ? 0.0 : 2.0 * static_cast<double>(edges_.size()) / static_cast<double>(n_);
}

SparseGraph SparseGraph::relabeled(std::span<const NodeId> perm) const {
  if (perm.size() != n_) throw GraphError("relabeled: permutation size mismatch");
  std::vector<std::pair<NodeId, NodeId>> mapped;
  mapped.reserve(edges_.size());
  for (const Edge& e : edges_) mapped.emplace_back(perm[e.u], perm[e.v]);
  return from_edges(n_, mapped);
}

SparseGraph build_graph(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges) {
  return SparseGraph::from_edges(n, edges);
}

}  // namespace cdgnn

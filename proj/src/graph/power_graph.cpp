#include <algorithm>

#include "cdgnn/graph.hpp"

namespace cdgnn {
namespace {

struct Structure {
  std::vector<std::int64_t> offsets;
  std::vector<NodeId> cols;
};

// Support of S*S for a symmetric 0/1 structure S (diagonal allowed).
Structure boolean_square(const Structure& s, std::size_t n) {
  Structure out;
  out.offsets.assign(n + 1, 0);
  std::vector<NodeId> stamp(n, -1);
  std::vector<NodeId> row;
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    const auto me = static_cast<NodeId>(i);
    for (std::int64_t p = s.offsets[i]; p < s.offsets[i + 1]; ++p) {
      const NodeId mid = s.cols[p];
      for (std::int64_t q = s.offsets[mid]; q < s.offsets[mid + 1]; ++q) {
        const NodeId to = s.cols[q];
        if (stamp[to] != me) {
          stamp[to] = me;
          row.push_back(to);
        }
      }
    }
    std::sort(row.begin(), row.end());
    out.cols.insert(out.cols.end(), row.begin(), row.end());
    out.offsets[i + 1] = static_cast<std::int64_t>(out.cols.size());
  }
  return out;
}

}  // namespace

SparseGraph power_graph(const SparseGraph& g, int level) {
  if (level < 0) throw GraphError("power_graph: level must be >= 0");
  if (level == 0) return g;
  const std::size_t n = g.num_nodes();
  Structure s{{g.row_offsets().begin(), g.row_offsets().end()},
              {g.col_indices().begin(), g.col_indices().end()}};
  for (int j = 0; j < level; ++j) s = boolean_square(s, n);

  std::vector<std::int64_t> offsets(n + 1, 0);
  std::vector<NodeId> cols;
  cols.reserve(s.cols.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::int64_t p = s.offsets[i]; p < s.offsets[i + 1]; ++p)
      if (s.cols[p] != static_cast<NodeId>(i)) cols.push_back(s.cols[p]);
    offsets[i + 1] = static_cast<std::int64_t>(cols.size());
  }
  return SparseGraph::from_csr(n, std::move(offsets), std::move(cols));
}

LineGraph line_graph(const SparseGraph& g) {
  if (g.num_edges() == 0) throw GraphError("line_graph: graph has no edges");
  LineGraph out{SparseGraph{}, EdgeIncidence(g)};
  const auto& inc = out.incidence;
  const auto edges = g.edges();
  const auto p_off = inc.row_offsets();
  const auto p_col = inc.col_indices();

  std::vector<std::int64_t> offsets(edges.size() + 1, 0);
  std::vector<NodeId> cols;
  std::vector<NodeId> row;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    row.clear();
    // Incident edge sets of u and v intersect only in e itself.
    for (NodeId end : {edges[e].u, edges[e].v})
      for (std::int64_t p = p_off[end]; p < p_off[end + 1]; ++p)
        if (p_col[p] != static_cast<NodeId>(e)) row.push_back(p_col[p]);
    std::sort(row.begin(), row.end());
    cols.insert(cols.end(), row.begin(), row.end());
    offsets[e + 1] = static_cast<std::int64_t>(cols.size());
  }
  out.graph = SparseGraph::from_csr(edges.size(), std::move(offsets), std::move(cols));
  return out;
}

}  // namespace cdgnn

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cdgnn/matrix.hpp"

namespace cdgnn {

using NodeId = std::int32_t;

class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Undirected edge in canonical orientation (u < v).
struct Edge {
  NodeId u;
  NodeId v;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Immutable simple undirected graph in CSR form.
///
/// Columns are sorted within each row, there are no self-loops or duplicate
/// edges, and the adjacency is symmetric. The canonical edge list is
/// lexicographic in (u, v) with u < v; its order defines edge ids everywhere
/// (line graph node order, incidence columns).
class SparseGraph {
 public:
  SparseGraph() = default;

  /// Canonicalizes an arbitrary edge list: orientation is normalized and
  /// duplicates collapse. Throws GraphError on out-of-range ids or self-loops.
  static SparseGraph from_edges(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges);

  /// Adopts a CSR structure that is already symmetric, sorted and loop-free.
  /// Validates the structure; throws GraphError otherwise.
  static SparseGraph from_csr(std::size_t n, std::vector<std::int64_t> row_offsets,
                              std::vector<NodeId> col_indices);

  std::size_t num_nodes() const noexcept { return n_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }

  std::span<const std::int64_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const NodeId> col_indices() const noexcept { return col_indices_; }
  std::span<const Edge> edges() const noexcept { return edges_; }

  std::size_t degree(NodeId i) const noexcept {
    return static_cast<std::size_t>(row_offsets_[i + 1] - row_offsets_[i]);
  }
  std::span<const NodeId> neighbors(NodeId i) const noexcept {
    return {col_indices_.data() + row_offsets_[i], degree(i)};
  }
  bool has_edge(NodeId i, NodeId j) const noexcept;

  /// 2m / n, zero for the empty graph.
  double average_degree() const noexcept;

  /// Same graph with node i renamed to perm[i].
  SparseGraph relabeled(std::span<const NodeId> perm) const;

 private:
  void build_edge_list();

  std::size_t n_ = 0;
  std::vector<std::int64_t> row_offsets_{0};
  std::vector<NodeId> col_indices_;
  std::vector<Edge> edges_;
};

/// Free-function spelling of SparseGraph::from_edges.
SparseGraph build_graph(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges);

/// Sparse |V| x |E| 0/1 matrix P with P(i, e) = 1 iff node i is an endpoint
/// of edge e, stored together with its transpose.
class EdgeIncidence {
 public:
  EdgeIncidence() = default;
  explicit EdgeIncidence(const SparseGraph& g);

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_edges() const noexcept { return num_edges_; }

  /// CSR of P: row i lists incident edge ids in ascending order.
  std::span<const std::int64_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const NodeId> col_indices() const noexcept { return col_indices_; }
  /// CSR of P^T: row e lists its two endpoints (u, v).
  std::span<const std::int64_t> t_row_offsets() const noexcept { return t_row_offsets_; }
  std::span<const NodeId> t_col_indices() const noexcept { return t_col_indices_; }

  /// P * Y: node i receives the sum of its incident edge rows.
  template <class T>
  Matrix<T> apply(const Matrix<T>& edge_features) const;
  /// P^T * X: edge (u,v) receives X_u + X_v.
  template <class T>
  Matrix<T> apply_transpose(const Matrix<T>& node_features) const;

 private:
  std::size_t num_nodes_ = 0;
  std::size_t num_edges_ = 0;
  std::vector<std::int64_t> row_offsets_{0};
  std::vector<NodeId> col_indices_;
  std::vector<std::int64_t> t_row_offsets_{0};
  std::vector<NodeId> t_col_indices_;
};

struct LineGraph {
  SparseGraph graph;       // nodes are edges of G, in G.edges() order
  EdgeIncidence incidence;  // P for G
};

/// (A X)_i = sum over neighbours j of X_j.
template <class T>
Matrix<T> adjacency_apply(const SparseGraph& g, const Matrix<T>& x);

/// (D X)_i = deg(i) * X_i.
template <class T>
Matrix<T> degree_apply(const SparseGraph& g, const Matrix<T>& x);

/// |V| x 1 column of node degrees.
FeatureMatrix degree_vector(const SparseGraph& g);

/// Every output row equals the column mean of X.
template <class T>
Matrix<T> broadcast_apply(const Matrix<T>& x);

/// Binary graph on the off-diagonal support of A^(2^level). Level 0 returns
/// a copy of g. Computed by `level` boolean squarings of the structure;
/// diagonal entries are kept while squaring (closed walks matter for longer
/// walks) and dropped from the result.
SparseGraph power_graph(const SparseGraph& g, int level);

/// Undirected line graph plus the incidence matrix of g. Throws GraphError
/// when g has no edges.
LineGraph line_graph(const SparseGraph& g);

/// Plain "i<TAB>j" edge list, '#' comments ignored, gzip accepted. The node
/// count is max id + 1 unless `num_nodes` is given.
SparseGraph read_edge_list(const std::string& path, std::size_t num_nodes = 0);
void write_edge_list(const SparseGraph& g, const std::string& path);

}  // namespace cdgnn

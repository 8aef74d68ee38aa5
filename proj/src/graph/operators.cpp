#include "cdgnn/graph.hpp"
#include "cdgnn/kernels.hpp"

namespace cdgnn {
namespace {

void require_rows(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(want) + " rows, got " +
                     std::to_string(got));
  }
}

}  // namespace

template <class T>
Matrix<T> adjacency_apply(const SparseGraph& g, const Matrix<T>& x) {
  require_rows(x.rows(), g.num_nodes(), "adjacency_apply");
  Matrix<T> y(x.rows(), x.cols());
  kernels::active<T>().spmm(g.row_offsets().data(), g.col_indices().data(), g.num_nodes(),
                            x.data(), x.cols(), y.data());
  return y;
}

template <class T>
Matrix<T> degree_apply(const SparseGraph& g, const Matrix<T>& x) {
  require_rows(x.rows(), g.num_nodes(), "degree_apply");
  Matrix<T> y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const T deg = static_cast<T>(g.degree(static_cast<NodeId>(i)));
    for (std::size_t c = 0; c < x.cols(); ++c) y(i, c) = deg * x(i, c);
  }
  return y;
}

FeatureMatrix degree_vector(const SparseGraph& g) {
  FeatureMatrix d(g.num_nodes(), 1);
  for (std::size_t i = 0; i < g.num_nodes(); ++i)
    d(i, 0) = static_cast<double>(g.degree(static_cast<NodeId>(i)));
  return d;
}

template <class T>
Matrix<T> broadcast_apply(const Matrix<T>& x) {
  Matrix<T> y(x.rows(), x.cols());
  if (x.rows() == 0) return y;
  std::vector<T> mean(x.cols(), T(0));
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t c = 0; c < x.cols(); ++c) mean[c] += x(i, c);
  for (auto& m : mean) m /= static_cast<T>(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t c = 0; c < x.cols(); ++c) y(i, c) = mean[c];
  return y;
}

EdgeIncidence::EdgeIncidence(const SparseGraph& g)
    : num_nodes_(g.num_nodes()), num_edges_(g.num_edges()) {
  const auto edges = g.edges();
  row_offsets_.assign(num_nodes_ + 1, 0);
  for (const Edge& e : edges) {
    ++row_offsets_[e.u + 1];
    ++row_offsets_[e.v + 1];
  }
  for (std::size_t i = 0; i < num_nodes_; ++i) row_offsets_[i + 1] += row_offsets_[i];
  col_indices_.resize(2 * num_edges_);
  std::vector<std::int64_t> fill(row_offsets_.begin(), row_offsets_.end() - 1);
  // Edge ids ascend, so rows come out sorted.
  for (std::size_t e = 0; e < edges.size(); ++e) {
    col_indices_[fill[edges[e].u]++] = static_cast<NodeId>(e);
    col_indices_[fill[edges[e].v]++] = static_cast<NodeId>(e);
  }
  t_row_offsets_.resize(num_edges_ + 1);
  t_col_indices_.resize(2 * num_edges_);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    t_row_offsets_[e] = static_cast<std::int64_t>(2 * e);
    t_col_indices_[2 * e] = edges[e].u;
    t_col_indices_[2 * e + 1] = edges[e].v;
  }
  t_row_offsets_[num_edges_] = static_cast<std::int64_t>(2 * num_edges_);
}

template <class T>
Matrix<T> EdgeIncidence::apply(const Matrix<T>& edge_features) const {
  require_rows(edge_features.rows(), num_edges_, "EdgeIncidence::apply");
  Matrix<T> y(num_nodes_, edge_features.cols());
  kernels::active<T>().spmm(row_offsets_.data(), col_indices_.data(), num_nodes_,
                            edge_features.data(), edge_features.cols(), y.data());
  return y;
}

template <class T>
Matrix<T> EdgeIncidence::apply_transpose(const Matrix<T>& node_features) const {
  require_rows(node_features.rows(), num_nodes_, "EdgeIncidence::apply_transpose");
  Matrix<T> y(num_edges_, node_features.cols());
  kernels::active<T>().spmm(t_row_offsets_.data(), t_col_indices_.data(), num_edges_,
                            node_features.data(), node_features.cols(), y.data());
  return y;
}

template Matrix<float> adjacency_apply(const SparseGraph&, const Matrix<float>&);
template Matrix<double> adjacency_apply(const SparseGraph&, const Matrix<double>&);
template Matrix<float> degree_apply(const SparseGraph&, const Matrix<float>&);
template Matrix<double> degree_apply(const SparseGraph&, const Matrix<double>&);
template Matrix<float> broadcast_apply(const Matrix<float>&);
template Matrix<double> broadcast_apply(const Matrix<double>&);
template Matrix<float> EdgeIncidence::apply(const Matrix<float>&) const;
template Matrix<double> EdgeIncidence::apply(const Matrix<double>&) const;
template Matrix<float> EdgeIncidence::apply_transpose(const Matrix<float>&) const;
template Matrix<double> EdgeIncidence::apply_transpose(const Matrix<double>&) const;

}  // namespace cdgnn

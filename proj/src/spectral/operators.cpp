#include <algorithm>
#include <cmath>

#include "cdgnn/spectral.hpp"

namespace cdgnn {

std::size_t LinearOperatorSpec::dim() const {
  if (graph == nullptr) throw GraphError("operator has no graph");
  return kind == OperatorKind::nonbacktracking ? 2 * graph->num_edges() : graph->num_nodes();
}

FeatureMatrix apply_operator(const LinearOperatorSpec& op, const FeatureMatrix& x) {
  const std::size_t n = op.dim();
  if (x.rows() != n)
    throw ShapeError("apply_operator: expected " + std::to_string(n) + " rows, got " +
                     std::to_string(x.rows()));
  const SparseGraph& g = *op.graph;
  const std::size_t d = x.cols();

  switch (op.kind) {
    case OperatorKind::adjacency:
      return adjacency_apply(g, x);

    case OperatorKind::laplacian_unnormalized: {
      FeatureMatrix y = adjacency_apply(g, x);
      for (std::size_t i = 0; i < n; ++i) {
        const double deg = static_cast<double>(g.degree(static_cast<NodeId>(i)));
        for (std::size_t c = 0; c < d; ++c) y(i, c) = deg * x(i, c) - y(i, c);
      }
      return y;
    }

    case OperatorKind::laplacian_symmetric: {
      std::vector<double> inv_sqrt(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto deg = g.degree(static_cast<NodeId>(i));
        if (deg > 0) inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(deg));
      }
      FeatureMatrix scaled(n, d);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) scaled(i, c) = inv_sqrt[i] * x(i, c);
      FeatureMatrix y = adjacency_apply(g, scaled);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) y(i, c) = x(i, c) - inv_sqrt[i] * y(i, c);
      return y;
    }

    case OperatorKind::bethe_hessian: {
      FeatureMatrix y = adjacency_apply(g, x);
      const double r = op.r;
      for (std::size_t i = 0; i < n; ++i) {
        const double diag = r * r - 1.0 + static_cast<double>(g.degree(static_cast<NodeId>(i)));
        for (std::size_t c = 0; c < d; ++c) y(i, c) = diag * x(i, c) - r * y(i, c);
      }
      return y;
    }

    case OperatorKind::nonbacktracking: {
      const NonBacktracking b(g);
      FeatureMatrix y(n, d);
      std::vector<double> col_in(n), col_out(n);
      for (std::size_t c = 0; c < d; ++c) {
        for (std::size_t p = 0; p < n; ++p) col_in[p] = x(p, c);
        b.apply(col_in, col_out);
        for (std::size_t p = 0; p < n; ++p) y(p, c) = col_out[p];
      }
      return y;
    }
  }
  throw GraphError("apply_operator: unknown operator kind");
}

NonBacktracking::NonBacktracking(const SparseGraph& g) : graph_(&g) {
  const auto offsets = g.row_offsets();
  const auto cols = g.col_indices();
  source_.resize(cols.size());
  reverse_.resize(cols.size());
  for (std::size_t i = 0; i < g.num_nodes(); ++i)
    for (auto p = offsets[i]; p < offsets[i + 1]; ++p) source_[p] = static_cast<NodeId>(i);
  for (std::size_t p = 0; p < cols.size(); ++p) {
    const NodeId j = cols[p];
    const auto begin = cols.begin() + offsets[j], end = cols.begin() + offsets[j + 1];
    reverse_[p] = static_cast<std::size_t>(std::lower_bound(begin, end, source_[p]) - cols.begin());
  }
}

void NonBacktracking::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != dim() || y.size() != dim()) throw ShapeError("NonBacktracking::apply: size");
  const auto offsets = graph_->row_offsets();
  // (Bx)_{i->j} = sum over j->l of x_{j->l}, minus the reversal j->i.
  std::vector<double> out_sum(graph_->num_nodes(), 0.0);
  for (std::size_t v = 0; v < out_sum.size(); ++v)
    for (auto p = offsets[v]; p < offsets[v + 1]; ++p) out_sum[v] += x[p];
  for (std::size_t p = 0; p < dim(); ++p) y[p] = out_sum[target(p)] - x[reverse_[p]];
}

double NonBacktracking::spectral_radius(std::size_t max_iter, double tol) const {
  if (dim() == 0) return 0;
  std::vector<double> x(dim(), 1.0 / std::sqrt(static_cast<double>(dim()))), y(dim());
  double ratio = 0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    apply(x, y);
    double norm = 0;
    for (double v : y) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0) return 0;  // nilpotent, e.g. a forest
    for (std::size_t p = 0; p < dim(); ++p) x[p] = y[p] / norm;
    const bool done = it > 0 && std::abs(norm - ratio) <= tol * norm;
    ratio = norm;
    if (done) break;
  }
  return ratio;
}

NonBacktracking nonbacktracking_matrix(const SparseGraph& g) {
  if (g.num_edges() == 0) throw GraphError("nonbacktracking_matrix: graph has no edges");
  return NonBacktracking(g);
}

}  // namespace cdgnn

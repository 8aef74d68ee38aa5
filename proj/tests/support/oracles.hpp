#pragma once

// Test-only reference implementations. Everything here works on dense
// matrices built straight from edge lists and never calls into the library's
// sparse code paths.

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "cdgnn/graph.hpp"

namespace oracle {

using Dense = std::vector<std::vector<double>>;
using EdgePairs = std::vector<std::pair<cdgnn::NodeId, cdgnn::NodeId>>;

inline Dense zeros(std::size_t r, std::size_t c) { return Dense(r, std::vector<double>(c, 0.0)); }

inline Dense adjacency(std::size_t n, const EdgePairs& edges) {
  Dense a = zeros(n, n);
  for (auto [i, j] : edges) {
    a[i][j] = 1.0;
    a[j][i] = 1.0;
  }
  return a;
}

inline Dense matmul(const Dense& a, const Dense& b) {
  const std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
  Dense c = zeros(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t j = 0; j < m; ++j) c[i][j] += a[i][p] * b[p][j];
  return c;
}

/// Boolean matrix power A^e (support only).
inline Dense boolean_power(const Dense& a, unsigned e) {
  const std::size_t n = a.size();
  Dense result = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) result[i][i] = 1.0;
  for (unsigned s = 0; s < e; ++s) {
    Dense next = matmul(result, a);
    for (auto& row : next)
      for (auto& v : row) v = v > 0 ? 1.0 : 0.0;
    result = std::move(next);
  }
  return result;
}

/// Erdos-Renyi edge list with edge probability p, drawn pair by pair.
inline EdgePairs random_edges(std::size_t n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  EdgePairs edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (coin(rng)) edges.emplace_back(static_cast<cdgnn::NodeId>(i), static_cast<cdgnn::NodeId>(j));
  return edges;
}

/// Random tree on n nodes (each node attaches to a uniformly chosen earlier node).
inline EdgePairs random_tree(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  EdgePairs edges;
  for (std::size_t i = 1; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    edges.emplace_back(static_cast<cdgnn::NodeId>(pick(rng)), static_cast<cdgnn::NodeId>(i));
  }
  return edges;
}

inline Dense random_dense(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Dense m = zeros(r, c);
  for (auto& row : m)
    for (auto& v : row) v = g(rng);
  return m;
}

inline cdgnn::FeatureMatrix to_matrix(const Dense& d) {
  cdgnn::FeatureMatrix m(d.size(), d.empty() ? 0 : d[0].size());
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d[i].size(); ++j) m(i, j) = d[i][j];
  return m;
}

inline Dense from_matrix(const cdgnn::FeatureMatrix& m) {
  Dense d = zeros(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) d[i][j] = m(i, j);
  return d;
}

inline double max_abs_diff(const Dense& a, const Dense& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) m = std::max(m, std::abs(a[i][j] - b[i][j]));
  return m;
}

}  // namespace oracle

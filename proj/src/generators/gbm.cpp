#include <algorithm>
#include <cmath>

#include "cdgnn/generators.hpp"
#include "cdgnn/kernels.hpp"
#include "cdgnn/rng.hpp"

namespace cdgnn {

void GbmConfig::validate() const {
  if (k < 2) throw ConfigError("GBM: k must be >= 2");
  if (dim < 1) throw ConfigError("GBM: dimension must be >= 1");
  if (separation < 0) throw ConfigError("GBM: separation S must be >= 0");
  if (!(radius > 0)) throw ConfigError("GBM: radius T must be > 0");
  if (n % static_cast<std::size_t>(k) != 0) throw ConfigError("GBM: k must divide n");
  if (k > 2 && dim + 1 < static_cast<std::size_t>(k))
    throw ConfigError("GBM: a regular simplex of k means needs dim >= k-1");
}

std::vector<std::vector<double>> gbm_means(const GbmConfig& cfg) {
  cfg.validate();
  const auto k = static_cast<std::size_t>(cfg.k);
  std::vector<std::vector<double>> means(k, std::vector<double>(cfg.dim, 0.0));
  if (k == 2) {
    means[0][0] = -cfg.separation / 2;
    means[1][0] = cfg.separation / 2;
    return means;
  }
  // Centered standard basis vectors e_r - (1/k) 1 have pairwise distance
  // sqrt(2); express them in an orthonormal basis of their (k-1)-dim span.
  std::vector<std::vector<double>> centered(k, std::vector<double>(k, -1.0 / k));
  for (std::size_t r = 0; r < k; ++r) centered[r][r] += 1.0;
  std::vector<std::vector<double>> basis;
  for (std::size_t r = 0; r < k && basis.size() + 1 < k; ++r) {
    auto v = centered[r];
    for (const auto& q : basis) {
      double d = 0;
      for (std::size_t c = 0; c < k; ++c) d += v[c] * q[c];
      for (std::size_t c = 0; c < k; ++c) v[c] -= d * q[c];
    }
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-12) continue;
    for (double& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  const double scale = cfg.separation / std::sqrt(2.0);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < basis.size(); ++c) {
      double d = 0;
      for (std::size_t t = 0; t < k; ++t) d += centered[r][t] * basis[c][t];
      means[r][c] = scale * d;
    }
  return means;
}

LabeledGraph sample_gbm(const GbmConfig& cfg, std::uint64_t seed) {
  const auto means = gbm_means(cfg);
  Rng rng = make_rng(seed);
  const std::size_t n = cfg.n;
  const std::size_t dim = cfg.dim;

  Labeling labels(n);
  const std::size_t block = n / static_cast<std::size_t>(cfg.k);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<std::int32_t>(i / block);
  std::shuffle(labels.begin(), labels.end(), rng);

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> points(n * dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < dim; ++c) points[i * dim + c] = means[labels[i]][c] + gauss(rng);

  const double thresh = cfg.radius / std::sqrt(static_cast<double>(n));
  const double thresh2 = thresh * thresh;
  const auto& k = kernels::active<double>();
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (k.sq_dist(&points[i * dim], &points[j * dim], dim) <= thresh2)
        edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));

  LabeledGraph out;
  out.graph = SparseGraph::from_edges(n, edges);
  out.truth = std::move(labels);
  out.meta.k = cfg.k;
  out.meta.source = "gbm";
  return out;
}

}  // namespace cdgnn

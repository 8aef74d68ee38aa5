#include <cmath>

#include "cdgnn/kernels.hpp"
#include "cdgnn/rng.hpp"
#include "cdgnn/spectral.hpp"

namespace cdgnn {

SpectralMethod parse_spectral_method(const std::string& name) {
  if (name == "laplacian_sym") return SpectralMethod::laplacian_sym;
  if (name == "bh_assoc") return SpectralMethod::bh_assoc;
  if (name == "bh_disassoc") return SpectralMethod::bh_disassoc;
  throw ConfigError("unknown spectral method '" + name + "'");
}

std::string to_string(SpectralMethod m) {
  switch (m) {
    case SpectralMethod::laplacian_sym: return "laplacian_sym";
    case SpectralMethod::bh_assoc: return "bh_assoc";
    case SpectralMethod::bh_disassoc: return "bh_disassoc";
  }
  return "?";
}

namespace {

ClusterResult trivial(const SparseGraph& g, const char* why) {
  ClusterResult out;
  out.labels.assign(g.num_nodes(), 0);
  out.degenerate = true;
  out.warnings.emplace_back(why);
  return out;
}

void kmeans_into(ClusterResult& out, const FeatureMatrix& embedding, int k, std::uint64_t seed) {
  KMeansConfig kc;
  kc.seed = derive_seed(seed, 0x63);
  auto km = kmeans(embedding, k, kc);
  out.labels = std::move(km.labels);
  out.degenerate = km.degenerate;
  if (km.degenerate) out.warnings.emplace_back("k-means produced degenerate clusters");
}

// In-place modified Gram-Schmidt on the columns of a row-major matrix.
void orthonormalize_columns(FeatureMatrix& v, std::uint64_t seed) {
  const std::size_t n = v.rows(), k = v.cols();
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t q = 0; q < j; ++q) {
      double d = 0;
      for (std::size_t i = 0; i < n; ++i) d += v(i, q) * v(i, j);
      for (std::size_t i = 0; i < n; ++i) v(i, j) -= d * v(i, q);
    }
    double nv = 0;
    for (std::size_t i = 0; i < n; ++i) nv += v(i, j) * v(i, j);
    nv = std::sqrt(nv);
    if (nv == 0) {
      // collapsed column: restart it from noise
      Rng rng = make_rng(seed, j);
      std::normal_distribution<double> gauss;
      for (std::size_t i = 0; i < n; ++i) v(i, j) = gauss(rng);
      --j;
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) v(i, j) /= nv;
  }
}

}  // namespace

ClusterResult spectral_cluster(const SparseGraph& g, int k, SpectralMethod method,
                               const SpectralConfig& cfg) {
  if (k < 2) throw ConfigError("spectral_cluster: k must be >= 2");
  if (static_cast<std::size_t>(k) > g.num_nodes())
    throw ConfigError("spectral_cluster: k exceeds node count");
  if (g.num_edges() == 0) return trivial(g, "graph has no edges; all nodes labelled 0");

  const double r = std::sqrt(g.average_degree());
  LinearOperatorSpec op;
  switch (method) {
    case SpectralMethod::laplacian_sym: op = LinearOperatorSpec::laplacian_sym(g); break;
    case SpectralMethod::bh_assoc: op = LinearOperatorSpec::bethe_hessian(g, r); break;
    case SpectralMethod::bh_disassoc: op = LinearOperatorSpec::bethe_hessian(g, -r); break;
  }
  const std::size_t nv = cfg.num_vectors ? cfg.num_vectors : static_cast<std::size_t>(k);
  const EigenResult eig = smallest_eigenpairs(op, nv, cfg);

  ClusterResult out;
  out.converged = eig.all_converged();
  if (!out.converged) out.warnings.emplace_back("eigensolver did not converge for every vector");
  FeatureMatrix embedding(g.num_nodes(), nv);
  for (std::size_t j = 0; j < nv; ++j) {
    out.eigenvalues.push_back(eig.pairs[j].value);
    for (std::size_t i = 0; i < g.num_nodes(); ++i) embedding(i, j) = eig.pairs[j].vector[i];
  }
  kmeans_into(out, embedding, k, cfg.seed);
  return out;
}

ClusterResult truncated_pm_baseline(const SparseGraph& g, int k, std::size_t layers,
                                    std::uint64_t seed) {
  if (k < 2) throw ConfigError("truncated_pm_baseline: k must be >= 2");
  if (layers < 1) throw ConfigError("truncated_pm_baseline: layers must be >= 1");
  if (static_cast<std::size_t>(k) > g.num_nodes())
    throw ConfigError("truncated_pm_baseline: k exceeds node count");
  if (g.num_edges() == 0) return trivial(g, "graph has no edges; all nodes labelled 0");

  const auto op = LinearOperatorSpec::bethe_hessian(g, std::sqrt(g.average_degree()));
  const double shift = 1.05 * estimate_operator_norm(op, 20, seed);
  const std::size_t n = g.num_nodes();
  const auto kk = static_cast<std::size_t>(k);

  Rng rng = make_rng(seed, 0x9a);
  std::normal_distribution<double> gauss;
  FeatureMatrix v(n, kk);
  for (double& x : v.values()) x = gauss(rng);
  orthonormalize_columns(v, seed);
  for (std::size_t step = 0; step < layers; ++step) {
    const FeatureMatrix mv = apply_operator(op, v);
    for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] = shift * v.data()[i] - mv.data()[i];
    orthonormalize_columns(v, derive_seed(seed, step + 1));
  }

  ClusterResult out;
  out.converged = false;  // by construction: fixed budget
  kmeans_into(out, v, k, seed);
  return out;
}

}  // namespace cdgnn

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdgnn/generators.hpp"
#include "cdgnn/graph.hpp"
#include "cdgnn/matrix.hpp"

namespace cdgnn {

enum class OperatorKind {
  laplacian_unnormalized,  // D - A
  laplacian_symmetric,     // I - D^-1/2 A D^-1/2 (isolated nodes: identity row)
  bethe_hessian,           // (r^2 - 1) I - r A + D
  adjacency,
  nonbacktracking,         // directed-edge operator, dimension 2m
};

/// Matrix-free operator over a graph. Holds a pointer to the graph, which
/// must outlive the spec.
struct LinearOperatorSpec {
  OperatorKind kind = OperatorKind::adjacency;
  const SparseGraph* graph = nullptr;
  double r = 0;  // Bethe Hessian parameter

  static LinearOperatorSpec laplacian(const SparseGraph& g) {
    return {OperatorKind::laplacian_unnormalized, &g};
  }
  static LinearOperatorSpec laplacian_sym(const SparseGraph& g) {
    return {OperatorKind::laplacian_symmetric, &g};
  }
  static LinearOperatorSpec bethe_hessian(const SparseGraph& g, double r) {
    return {OperatorKind::bethe_hessian, &g, r};
  }
  static LinearOperatorSpec adjacency(const SparseGraph& g) {
    return {OperatorKind::adjacency, &g};
  }
  static LinearOperatorSpec nonbacktracking(const SparseGraph& g) {
    return {OperatorKind::nonbacktracking, &g};
  }

  std::size_t dim() const;
  bool symmetric() const noexcept { return kind != OperatorKind::nonbacktracking; }
};

/// Applies the operator column by column. Throws ShapeError on a row mismatch.
FeatureMatrix apply_operator(const LinearOperatorSpec& op, const FeatureMatrix& x);

struct SpectralConfig {
  std::size_t num_vectors = 0;  // 0: use k
  std::size_t max_iter = 10000;
  double tol = 1e-8;            // residual tolerance relative to |M|
  std::optional<std::size_t> iter_budget;  // hard cap, overrides max_iter
  std::size_t norm_steps = 20;  // power steps for the |M| estimate
  double norm_margin = 1.05;
  std::uint64_t seed = 0;

  void validate() const;
};

/// |M| estimated by `steps` power iterations from a seeded Gaussian start.
double estimate_operator_norm(const LinearOperatorSpec& op, std::size_t steps, std::uint64_t seed);

struct EigenPair {
  std::vector<double> vector;  // unit norm, largest-magnitude entry positive
  double value = 0;
  double residual = 0;         // |Mv - value v|
  std::size_t iterations = 0;
  bool converged = false;
};

/// Power iteration on (margin |M|) I - M restricted to the orthogonal
/// complement of `deflate_against` (rows are orthonormal vectors). Returns the
/// algebraically smallest eigenpair of M in that complement. Converged when
/// |Mv - lambda v| <= tol |M|; otherwise the last iterate is returned with
/// converged = false.
EigenPair power_fiedler(const LinearOperatorSpec& op,
                        std::span<const std::vector<double>> deflate_against,
                        const SpectralConfig& cfg);
EigenPair power_fiedler(const LinearOperatorSpec& op, std::span<const double> deflate_against,
                        const SpectralConfig& cfg);

struct EigenResult {
  std::vector<EigenPair> pairs;  // ascending by value
  double norm_estimate = 0;
  bool all_converged() const noexcept;
};

/// The m algebraically smallest eigenpairs by repeated deflation.
EigenResult smallest_eigenpairs(const LinearOperatorSpec& op, std::size_t m,
                                const SpectralConfig& cfg);

struct KMeansConfig {
  std::size_t restarts = 10;
  std::size_t max_iter = 300;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  Labeling labels;
  FeatureMatrix centroids;
  double inertia = 0;
  bool degenerate = false;  // fewer than k distinct points, or a cluster stayed empty
};

/// Lloyd's algorithm with k-means++ seeding; best inertia over restarts
/// (earliest restart on ties). Nearest-centroid ties go to the lowest index.
KMeansResult kmeans(const FeatureMatrix& points, int k, const KMeansConfig& cfg = {});

enum class SpectralMethod { laplacian_sym, bh_assoc, bh_disassoc };

SpectralMethod parse_spectral_method(const std::string& name);
std::string to_string(SpectralMethod m);

struct ClusterResult {
  Labeling labels;
  std::vector<double> eigenvalues;
  bool converged = true;
  bool degenerate = false;
  std::vector<std::string> warnings;
};

/// Bottom eigenvectors of L_sym or BH(+-sqrt(dbar)), dbar = 2m/n, followed
/// by k-means on the embedding.
ClusterResult spectral_cluster(const SparseGraph& g, int k, SpectralMethod method,
                               const SpectralConfig& cfg = {});

/// Exactly `layers` steps of block power iteration with Gram-Schmidt on
/// |BH| I - BH(sqrt(dbar)), k vectors, no convergence test, then k-means.
ClusterResult truncated_pm_baseline(const SparseGraph& g, int k, std::size_t layers,
                                    std::uint64_t seed = 0);

/// Non-backtracking operator B on the 2m directed edges, indexed by CSR
/// position: slot p is the directed edge (row(p) -> col_indices[p]).
/// B_{i->j, k->l} = [j = k][i != l].
class NonBacktracking {
 public:
  explicit NonBacktracking(const SparseGraph& g);

  std::size_t dim() const noexcept { return source_.size(); }
  NodeId source(std::size_t p) const noexcept { return source_[p]; }
  NodeId target(std::size_t p) const noexcept { return graph_->col_indices()[p]; }
  std::size_t reverse(std::size_t p) const noexcept { return reverse_[p]; }

  /// y = B x.
  void apply(std::span<const double> x, std::span<double> y) const;

  /// Power iteration from the all-ones vector; B is nonnegative, so the
  /// growth ratio converges to the Perron root.
  double spectral_radius(std::size_t max_iter = 1000, double tol = 1e-10) const;

 private:
  const SparseGraph* graph_;
  std::vector<NodeId> source_;
  std::vector<std::size_t> reverse_;
};

NonBacktracking nonbacktracking_matrix(const SparseGraph& g);

}  // namespace cdgnn

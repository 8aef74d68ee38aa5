#pragma once

#include <cstdint>
#include <optional>

#include "cdgnn/generators.hpp"
#include "cdgnn/graph.hpp"
#include "cdgnn/matrix.hpp"

namespace cdgnn {

enum class BpSchedule {
  parallel,           // all messages from the previous sweep, double-buffered
  random_sequential,  // node by node in a fresh random order each sweep
};

struct BpConfig {
  std::size_t max_iter = 1000;
  double tol = 1e-6;          // on the largest message change in a sweep
  double damping = 0.0;       // weight kept on the previous message
  double noise = 0.1;         // amplitude of the initial perturbation
  bool external_field = true;  // mean-field term for absent edges
  BpSchedule schedule = BpSchedule::random_sequential;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Messages are indexed by CSR position: row p of `messages` is the message
/// from source(p) to col_indices[p].
struct BpState {
  FeatureMatrix messages;   // 2m x k, rows on the simplex
  std::vector<double> field;  // h_s, the absent-edge correction
  FeatureMatrix marginals;  // n x k
  std::size_t iterations = 0;
  double last_change = 0;
  bool converged = false;
};

/// Uniform messages perturbed by seeded noise of the configured amplitude.
FeatureMatrix bp_initial_messages(const SparseGraph& g, int k, const BpConfig& cfg);

/// Sum-product BP for the sparse SBM with affinity c_rs = a on the diagonal
/// and b off it, uniform prior, computed in log space. The random sequential
/// schedule is deterministic given the seed. Parallel sweeps need damping
/// around 0.5 and still fail to settle on strongly disassortative graphs.
/// `initial` overrides the seeded initialization.
BpState bp_sbm(const SparseGraph& g, double a, double b, int k, const BpConfig& cfg = {},
               const FeatureMatrix* initial = nullptr);

/// Argmax of the marginals, ties to the lowest class.
Labeling bp_predict(const BpState& state);

}  // namespace cdgnn

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cdgnn/generators.hpp"

namespace cdgnn {

struct OverlapResult {
  double overlap = 0;                  // (accuracy - 1/k) / (1 - 1/k)
  double accuracy = 0;                 // best matched fraction
  std::vector<int> best_permutation;   // pred label c is read as truth label perm[c]
};

/// Match fraction maximized over relabelings of `pred`, then normalized
/// against chance. Exhaustive for k <= 6, Hungarian assignment on the
/// confusion matrix above that. Throws ConfigError on length mismatch or
/// labels outside [0, k).
OverlapResult overlap(std::span<const std::int32_t> truth, std::span<const std::int32_t> pred, int k);

/// Same, but only the listed permutations are allowed (each a vector of k
/// labels). Used when only some classes are interchangeable.
OverlapResult overlap_restricted(std::span<const std::int32_t> truth,
                                 std::span<const std::int32_t> pred, int k,
                                 std::span<const std::vector<int>> allowed);

/// Maximum-weight perfect matching on a square matrix. Returns col[row].
std::vector<int> hungarian_max(const std::vector<std::vector<double>>& weight);

}  // namespace cdgnn

#include "cdgnn/overlap.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

namespace cdgnn {
namespace {

std::vector<std::vector<double>> confusion(std::span<const std::int32_t> truth,
                                           std::span<const std::int32_t> pred, int k) {
  if (k < 1) throw ConfigError("overlap: k must be >= 1");
  if (truth.size() != pred.size())
    throw ConfigError("overlap: truth has " + std::to_string(truth.size()) +
                      " labels, prediction has " + std::to_string(pred.size()));
  // conf[p][t] counts nodes predicted p with truth t
  std::vector<std::vector<double>> conf(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= k || pred[i] < 0 || pred[i] >= k)
      throw ConfigError("overlap: label out of range at node " + std::to_string(i));
    conf[pred[i]][truth[i]] += 1;
  }
  return conf;
}

OverlapResult finish(double matched, std::size_t n, int k, std::vector<int> perm) {
  OverlapResult r;
  r.accuracy = n ? matched / static_cast<double>(n) : 0.0;
  r.overlap = k > 1 ? (r.accuracy - 1.0 / k) / (1.0 - 1.0 / k) : 1.0;
  r.best_permutation = std::move(perm);
  return r;
}

double score(const std::vector<std::vector<double>>& conf, const std::vector<int>& perm) {
  double s = 0;
  for (std::size_t p = 0; p < perm.size(); ++p) s += conf[p][perm[p]];
  return s;
}

}  // namespace

std::vector<int> hungarian_max(const std::vector<std::vector<double>>& weight) {
  // Shortest augmenting path formulation on costs -w (1-based potentials).
  const int n = static_cast<int>(weight.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -weight[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> col(n, 0);
  for (int j = 1; j <= n; ++j)
    if (p[j]) col[p[j] - 1] = j - 1;
  return col;
}

OverlapResult overlap(std::span<const std::int32_t> truth, std::span<const std::int32_t> pred, int k) {
  const auto conf = confusion(truth, pred, k);
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  if (k > 6) {
    perm = hungarian_max(conf);
    return finish(score(conf, perm), truth.size(), k, perm);
  }
  std::vector<int> best = perm;
  double best_score = -1;
  do {
    const double s = score(conf, perm);
    if (s > best_score) {
      best_score = s;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return finish(best_score, truth.size(), k, best);
}

OverlapResult overlap_restricted(std::span<const std::int32_t> truth,
                                 std::span<const std::int32_t> pred, int k,
                                 std::span<const std::vector<int>> allowed) {
  if (allowed.empty()) throw ConfigError("overlap_restricted: no permutations given");
  const auto conf = confusion(truth, pred, k);
  double best_score = -1;
  std::vector<int> best;
  for (const auto& perm : allowed) {
    if (static_cast<int>(perm.size()) != k) throw ConfigError("overlap_restricted: bad permutation");
    const double s = score(conf, perm);
    if (s > best_score) {
      best_score = s;
      best = perm;
    }
  }
  return finish(best_score, truth.size(), k, best);
}

}  // namespace cdgnn

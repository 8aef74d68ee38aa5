#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "cdgnn/generators.hpp"
#include "cdgnn/rng.hpp"

namespace cdgnn {

double snr(double a, double b, int k, SnrFormula formula) {
  const double spread = formula == SnrFormula::standard ? k - 1 : k + 1;
  const double denom = k * (a + spread * b);
  if (!(denom > 0)) throw ConfigError("snr: degenerate denominator (a + (k-1) b must be > 0)");
  return (a - b) * (a - b) / denom;
}

RatePair rates_for_snr(double snr_value, double dbar, int k, bool associative) {
  if (snr_value < 0 || dbar <= 0 || k < 2) throw ConfigError("rates_for_snr: invalid arguments");
  const double gap = std::sqrt(snr_value * dbar);
  RatePair r{};
  if (associative) {
    r.a = dbar + (k - 1) * gap;
    r.b = dbar - gap;
  } else {
    r.a = dbar - (k - 1) * gap;
    r.b = dbar + gap;
  }
  if (r.a < 0 || r.b < 0) throw ConfigError("rates_for_snr: SNR unreachable at this average degree");
  return r;
}

void SbmConfig::validate() const {
  if (k < 2) throw ConfigError("SBM: k must be >= 2");
  if (n < static_cast<std::size_t>(k)) throw ConfigError("SBM: need n >= k");
  if (balanced && n % static_cast<std::size_t>(k) != 0)
    throw ConfigError("SBM: balanced model needs k to divide n");
  const double p = a / static_cast<double>(n);
  const double q = b / static_cast<double>(n);
  if (!(p >= 0 && p <= 1) || !(q >= 0 && q <= 1))
    throw ConfigError("SBM: edge probabilities a/n and b/n must lie in [0, 1]");
}

namespace {

// Maps an index in [0, m(m-1)/2) to the pair (i, j), i < j, in row-major order.
std::pair<std::uint64_t, std::uint64_t> unrank_triangle(std::uint64_t t, std::uint64_t m) {
  // Rows before row i hold i*m - i*(i+1)/2 pairs.
  const double mm = static_cast<double>(m);
  auto before = [m](std::uint64_t i) { return i * m - i * (i + 1) / 2; };
  auto i = static_cast<std::uint64_t>(
      std::floor(((2 * mm - 1) - std::sqrt((2 * mm - 1) * (2 * mm - 1) - 8.0 * t)) / 2));
  if (i > m - 2) i = m - 2;
  while (i > 0 && before(i) > t) --i;
  while (i + 1 <= m - 2 && before(i + 1) <= t) ++i;
  const std::uint64_t j = i + 1 + (t - before(i));
  return {i, j};
}

// Floyd's algorithm: `count` distinct values from [0, total).
std::vector<std::uint64_t> sample_distinct(std::uint64_t total, std::uint64_t count, Rng& rng) {
  std::vector<std::uint64_t> out;
  out.reserve(count);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(count * 2);
  for (std::uint64_t j = total - count; j < total; ++j) {
    std::uniform_int_distribution<std::uint64_t> pick(0, j);
    const std::uint64_t t = pick(rng);
    const std::uint64_t chosen = seen.insert(t).second ? t : j;
    if (chosen == j) seen.insert(j);
    out.push_back(chosen);
  }
  return out;
}

}  // namespace

LabeledGraph sample_sbm(const SbmConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng = make_rng(seed);
  const std::size_t n = cfg.n;
  const int k = cfg.k;

  Labeling labels(n);
  if (cfg.balanced) {
    const std::size_t block = n / static_cast<std::size_t>(k);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<std::int32_t>(i / block);
    std::shuffle(labels.begin(), labels.end(), rng);
  } else {
    std::uniform_int_distribution<int> pick(0, k - 1);
    for (auto& l : labels) l = pick(rng);
  }

  std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) members[labels[i]].push_back(static_cast<NodeId>(i));

  const double p = cfg.a / static_cast<double>(n);
  const double q = cfg.b / static_cast<double>(n);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (int r = 0; r < k; ++r) {
    for (int s = r; s < k; ++s) {
      const auto& mr = members[r];
      const auto& ms = members[s];
      const std::uint64_t total = r == s ? mr.size() * (mr.size() - (mr.empty() ? 0 : 1)) / 2
                                         : static_cast<std::uint64_t>(mr.size()) * ms.size();
      const double prob = r == s ? p : q;
      if (total == 0 || prob <= 0) continue;
      std::binomial_distribution<std::uint64_t> count_dist(total, prob);
      const std::uint64_t count = prob >= 1 ? total : count_dist(rng);
      for (std::uint64_t idx : sample_distinct(total, count, rng)) {
        if (r == s) {
          const auto [i, j] = unrank_triangle(idx, mr.size());
          edges.emplace_back(mr[i], mr[j]);
        } else {
          edges.emplace_back(mr[idx / ms.size()], ms[idx % ms.size()]);
        }
      }
    }
  }

  LabeledGraph out;
  out.graph = SparseGraph::from_edges(n, edges);
  out.truth = std::move(labels);
  out.meta.a = cfg.a;
  out.meta.b = cfg.b;
  out.meta.k = k;
  const double denom_spread = cfg.formula == SnrFormula::standard ? k - 1 : k + 1;
  out.meta.snr = cfg.a + denom_spread * cfg.b > 0 ? snr(cfg.a, cfg.b, k, cfg.formula) : 0.0;
  out.meta.source = "sbm";
  return out;
}

void MixtureConfig::validate() const {
  if (k < 2) throw ConfigError("mixture: k must be >= 2");
  if (!(dbar > 1)) throw ConfigError("mixture: average degree must exceed 1");
  if (randomize_dbar && !(dbar_max > 1)) throw ConfigError("mixture: dbar_max must exceed 1");
  if (disassociative_fraction < 0 || disassociative_fraction > 1)
    throw ConfigError("mixture: disassociative_fraction must lie in [0, 1]");
}

MixtureSampler::MixtureSampler(MixtureConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), seed_(seed) {
  cfg_.validate();
}

LabeledGraph MixtureSampler::operator()(std::size_t index) const {
  Rng rng = make_rng(seed_, 2 * index);
  double dbar = cfg_.dbar;
  if (cfg_.randomize_dbar) dbar = std::uniform_real_distribution<double>(1.0, cfg_.dbar_max)(rng);
  const double b_max = dbar - std::sqrt(dbar);
  double b = std::uniform_real_distribution<double>(0.0, b_max)(rng);
  double a = cfg_.k * dbar - b;
  const bool swap = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < cfg_.disassociative_fraction;
  if (swap) std::swap(a, b);

  SbmConfig sbm{cfg_.n, cfg_.k, a, b, true, cfg_.formula};
  LabeledGraph g = sample_sbm(sbm, derive_seed(seed_, 2 * index + 1));
  g.meta.source = "sbm-mixture";
  return g;
}

std::vector<LabeledGraph> sample_sbm_mixture(const MixtureConfig& cfg, std::uint64_t seed) {
  const MixtureSampler sampler(cfg, seed);
  std::vector<LabeledGraph> out;
  out.reserve(cfg.count);
  for (std::size_t i = 0; i < cfg.count; ++i) out.push_back(sampler(i));
  return out;
}

}  // namespace cdgnn

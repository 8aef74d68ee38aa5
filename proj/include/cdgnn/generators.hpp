#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdgnn/graph.hpp"

namespace cdgnn {

/// Community of each node, in {0..k-1}; meaningful only up to a global
/// relabeling of the communities.
using Labeling = std::vector<std::int32_t>;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct GraphMeta {
  double a = 0;  // within-community rate (p = a/n)
  double b = 0;  // cross-community rate (q = b/n)
  int k = 2;
  double snr = 0;
  std::string source;  // "sbm", "sbm-mixture", "gbm", "snap", ...
};

struct LabeledGraph {
  SparseGraph graph;
  Labeling truth;
  GraphMeta meta;
};

/// Denominator convention for the Kesten-Stigum signal-to-noise ratio.
enum class SnrFormula {
  standard,    // (a-b)^2 / (k (a + (k-1) b)); SNR = 1 at the k=2 threshold (a-b)^2 = 2(a+b)
  as_printed,  // (a-b)^2 / (k (a + (k+1) b))
};

/// Throws ConfigError when the denominator is not positive.
double snr(double a, double b, int k, SnrFormula formula = SnrFormula::standard);

/// (a, b) with average degree (a + (k-1) b)/k = dbar and the given SNR
/// (standard formula). Associative puts the larger rate inside communities.
struct RatePair {
  double a;
  double b;
};
RatePair rates_for_snr(double snr_value, double dbar, int k, bool associative = true);

struct SbmConfig {
  std::size_t n = 1000;
  int k = 2;
  double a = 3;
  double b = 3;
  bool balanced = true;
  SnrFormula formula = SnrFormula::standard;

  void validate() const;
};

/// Balanced assignment (block r holds nodes with label r, sizes n/k, then a
/// seeded shuffle of the labels) and independent edges with p = a/n inside
/// blocks and q = b/n across. Per block pair, the edge count is binomial and
/// the edges are a uniform subset of distinct pairs, so the cost is O(n + |E|).
LabeledGraph sample_sbm(const SbmConfig& cfg, std::uint64_t seed);

struct MixtureConfig {
  std::size_t n = 1000;
  int k = 2;
  double dbar = 3;             // fixed average degree
  bool randomize_dbar = false;  // draw dbar ~ Unif(1, dbar_max) per sample
  double dbar_max = 5;
  std::size_t count = 6000;
  /// Share of samples with a and b swapped (a < b). 0 reproduces the purely
  /// associative curriculum.
  double disassociative_fraction = 0;
  SnrFormula formula = SnrFormula::standard;

  void validate() const;
};

/// Draws b ~ Unif(0, dbar - sqrt(dbar)) and sets a = k*dbar - b per sample.
/// Sample i depends only on (seed, i).
class MixtureSampler {
 public:
  MixtureSampler(MixtureConfig cfg, std::uint64_t seed);
  LabeledGraph operator()(std::size_t index) const;
  const MixtureConfig& config() const noexcept { return cfg_; }

 private:
  MixtureConfig cfg_;
  std::uint64_t seed_;
};

std::vector<LabeledGraph> sample_sbm_mixture(const MixtureConfig& cfg, std::uint64_t seed);

struct GbmConfig {
  std::size_t n = 1000;
  int k = 2;
  std::size_t dim = 2;
  double separation = 1;  // pairwise distance S between the means
  double radius = 7.0710678118654752;  // T; edge iff |x_i - x_j| <= T / sqrt(n)

  void validate() const;
};

/// Component means: k points in R^dim with all pairwise distances equal to S
/// (+-S/2 e_1 for k = 2; a regular simplex in general).
std::vector<std::vector<double>> gbm_means(const GbmConfig& cfg);

/// n iid points from the balanced Gaussian mixture with identity covariance;
/// truth is the component index and edges follow the distance threshold.
LabeledGraph sample_gbm(const GbmConfig& cfg, std::uint64_t seed);

}  // namespace cdgnn

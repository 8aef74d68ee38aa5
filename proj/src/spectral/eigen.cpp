#include <algorithm>
#include <cmath>
#include <numeric>

#include "cdgnn/kernels.hpp"
#include "cdgnn/rng.hpp"
#include "cdgnn/spectral.hpp"

namespace cdgnn {
namespace {

double norm2(std::span<const double> v) {
  return std::sqrt(kernels::active<double>().dot(v.data(), v.data(), v.size()));
}

// Two passes of classical Gram-Schmidt; one pass loses orthogonality once
// the iterate is nearly inside the deflated span.
void project_out(std::vector<double>& v, std::span<const std::vector<double>> basis) {
  const auto& k = kernels::active<double>();
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& q : basis) k.axpy(-k.dot(q.data(), v.data(), v.size()), q.data(), v.data(), v.size());
}

std::vector<double> gaussian_vector(std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0xe16);
  std::normal_distribution<double> gauss;
  std::vector<double> v(n);
  for (double& x : v) x = gauss(rng);
  return v;
}

void canonical_sign(std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best]) + 1e-12) best = i;
  if (!v.empty() && v[best] < 0)
    for (double& x : v) x = -x;
}

FeatureMatrix as_column(const std::vector<double>& v) {
  return FeatureMatrix(v.size(), 1, v);
}

EigenPair deflated_power(const LinearOperatorSpec& op, std::span<const std::vector<double>> basis,
                         const SpectralConfig& cfg, double norm, std::uint64_t seed) {
  const std::size_t n = op.dim();
  if (basis.size() >= n) throw ShapeError("power iteration: deflation spans the whole space");
  for (const auto& q : basis)
    if (q.size() != n) throw ShapeError("power iteration: deflation vector has wrong length");

  const std::size_t max_iter = cfg.iter_budget ? *cfg.iter_budget : cfg.max_iter;
  const double shift = cfg.norm_margin * norm;
  const double target = cfg.tol * std::max(norm, 1e-300);
  const auto& k = kernels::active<double>();

  std::vector<double> w = gaussian_vector(n, seed);
  project_out(w, basis);
  double wn = norm2(w);
  if (wn == 0) {
    w.assign(n, 1.0);
    project_out(w, basis);
    wn = norm2(w);
  }
  for (double& x : w) x /= wn;

  EigenPair out;
  std::vector<double> r(n);
  for (std::size_t it = 0;; ++it) {
    const FeatureMatrix mw = apply_operator(op, as_column(w));
    const double lambda = k.dot(w.data(), mw.data(), n);
    // Residual inside the deflated complement: what the iteration can drive
    // to zero when the deflation vectors are themselves approximate.
    for (std::size_t i = 0; i < n; ++i) r[i] = mw.data()[i] - lambda * w[i];
    project_out(r, basis);
    out.value = lambda;
    out.residual = norm2(r);
    out.iterations = it;
    if (out.residual <= target) {
      out.converged = true;
      break;
    }
    if (it >= max_iter) break;
    // y = (c I - M) w
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = shift * w[i] - mw.data()[i];
    project_out(y, basis);
    const double yn = norm2(y);
    if (yn == 0) break;
    for (std::size_t i = 0; i < n; ++i) w[i] = y[i] / yn;
  }
  canonical_sign(w);
  out.vector = std::move(w);
  return out;
}

// Cyclic Jacobi for a small symmetric matrix: a becomes diagonal, v holds
// the eigenvectors as columns.
void jacobi_eigen(std::vector<std::vector<double>>& a, std::vector<std::vector<double>>& v) {
  const std::size_t m = a.size();
  v.assign(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) v[i][i] = 1;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t p = 0; p < m; ++p)
      for (std::size_t q = p + 1; q < m; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-300) break;
    for (std::size_t p = 0; p < m; ++p)
      for (std::size_t q = p + 1; q < m; ++q) {
        if (a[p][q] == 0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (std::size_t k = 0; k < m; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < m; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < m; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
  }
}

// Rayleigh-Ritz on the span of the deflated vectors. Sequential deflation
// leaves each vector slightly mixed with its predecessors; rotating within
// the span removes that, and residuals are then measured against M itself.
void rayleigh_ritz(const LinearOperatorSpec& op, std::vector<EigenPair>& pairs, double target) {
  const std::size_t m = pairs.size(), n = op.dim();
  if (m == 0) return;
  FeatureMatrix q(n, m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < n; ++i) q(i, j) = pairs[j].vector[i];
  const FeatureMatrix mq = apply_operator(op, q);
  std::vector<std::vector<double>> h(m, std::vector<double>(m, 0.0)), rot;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      for (std::size_t i = 0; i < n; ++i) h[a][b] += q(i, a) * mq(i, b);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b) h[a][b] = h[b][a] = 0.5 * (h[a][b] + h[b][a]);
  jacobi_eigen(h, rot);
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> v(n, 0.0), mv(n, 0.0);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t i = 0; i < n; ++i) {
        v[i] += q(i, a) * rot[a][j];
        mv[i] += mq(i, a) * rot[a][j];
      }
    const double lambda = h[j][j];
    double res = 0;
    for (std::size_t i = 0; i < n; ++i) res += (mv[i] - lambda * v[i]) * (mv[i] - lambda * v[i]);
    canonical_sign(v);
    pairs[j].vector = std::move(v);
    pairs[j].value = lambda;
    pairs[j].residual = std::sqrt(res);
    pairs[j].converged = pairs[j].converged && pairs[j].residual <= target;
  }
}

}  // namespace

void SpectralConfig::validate() const {
  if (!(tol > 0)) throw ConfigError("spectral: tol must be > 0");
  if (norm_margin < 1) throw ConfigError("spectral: norm margin must be >= 1");
}

double estimate_operator_norm(const LinearOperatorSpec& op, std::size_t steps, std::uint64_t seed) {
  const std::size_t n = op.dim();
  if (n == 0) return 0;
  std::vector<double> w = gaussian_vector(n, derive_seed(seed, 0x7e57));
  double est = 0;
  for (std::size_t s = 0; s < std::max<std::size_t>(steps, 1); ++s) {
    const double wn = norm2(w);
    if (wn == 0) return est;
    for (double& x : w) x /= wn;
    const FeatureMatrix y = apply_operator(op, as_column(w));
    w.assign(y.data(), y.data() + n);
    est = norm2(w);
  }
  return est;
}

EigenPair power_fiedler(const LinearOperatorSpec& op,
                        std::span<const std::vector<double>> deflate_against,
                        const SpectralConfig& cfg) {
  cfg.validate();
  if (!op.symmetric()) throw ConfigError("power_fiedler: operator must be symmetric");
  const double norm = estimate_operator_norm(op, cfg.norm_steps, cfg.seed);
  return deflated_power(op, deflate_against, cfg, norm, derive_seed(cfg.seed, 1));
}

EigenPair power_fiedler(const LinearOperatorSpec& op, std::span<const double> deflate_against,
                        const SpectralConfig& cfg) {
  std::vector<std::vector<double>> basis;
  if (!deflate_against.empty()) {
    basis.emplace_back(deflate_against.begin(), deflate_against.end());
    const double nv = norm2(basis[0]);
    if (nv == 0) throw ConfigError("power_fiedler: zero deflation vector");
    for (double& x : basis[0]) x /= nv;
  }
  return power_fiedler(op, std::span<const std::vector<double>>(basis), cfg);
}

bool EigenResult::all_converged() const noexcept {
  return std::all_of(pairs.begin(), pairs.end(), [](const EigenPair& p) { return p.converged; });
}

EigenResult smallest_eigenpairs(const LinearOperatorSpec& op, std::size_t m,
                                const SpectralConfig& cfg) {
  cfg.validate();
  if (!op.symmetric()) throw ConfigError("smallest_eigenpairs: operator must be symmetric");
  if (m > op.dim()) throw ConfigError("smallest_eigenpairs: more pairs requested than dimensions");
  EigenResult out;
  out.norm_estimate = estimate_operator_norm(op, cfg.norm_steps, cfg.seed);
  std::vector<std::vector<double>> basis;
  for (std::size_t i = 0; i < m; ++i) {
    EigenPair p = deflated_power(op, basis, cfg, out.norm_estimate, derive_seed(cfg.seed, i + 1));
    basis.push_back(p.vector);
    out.pairs.push_back(std::move(p));
  }
  rayleigh_ritz(op, out.pairs, cfg.tol * out.norm_estimate);
  std::stable_sort(out.pairs.begin(), out.pairs.end(),
                   [](const EigenPair& a, const EigenPair& b) { return a.value < b.value; });
  return out;
}

}  // namespace cdgnn

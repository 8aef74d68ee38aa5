#include "cdgnn/bp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cdgnn/rng.hpp"

namespace cdgnn {
namespace {

constexpr double kLogFloor = -700.0;  // log of a vanishing edge factor

// Normalizes exp(logp) in place, writing probabilities to out.
void softmax_row(const double* logp, double* out, int k) {
  const double top = *std::max_element(logp, logp + k);
  double z = 0;
  for (int s = 0; s < k; ++s) z += out[s] = std::exp(logp[s] - top);
  for (int s = 0; s < k; ++s) out[s] /= z;
}

}  // namespace

void BpConfig::validate() const {
  if (!(tol > 0)) throw ConfigError("bp: tol must be > 0");
  if (damping < 0 || damping >= 1) throw ConfigError("bp: damping must lie in [0, 1)");
  if (noise < 0 || noise >= 1) throw ConfigError("bp: noise must lie in [0, 1)");
}

FeatureMatrix bp_initial_messages(const SparseGraph& g, int k, const BpConfig& cfg) {
  if (k < 2) throw ConfigError("bp: k must be >= 2");
  FeatureMatrix msg(g.col_indices().size(), static_cast<std::size_t>(k));
  Rng rng = make_rng(cfg.seed, 0xb9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t p = 0; p < msg.rows(); ++p) {
    double z = 0;
    for (int s = 0; s < k; ++s) z += msg(p, s) = 1.0 + cfg.noise * u(rng);
    for (int s = 0; s < k; ++s) msg(p, s) /= z;
  }
  return msg;
}

BpState bp_sbm(const SparseGraph& g, double a, double b, int k, const BpConfig& cfg,
               const FeatureMatrix* initial) {
  cfg.validate();
  if (k < 2) throw ConfigError("bp: k must be >= 2");
  if (a < 0 || b < 0 || a + b <= 0) throw ConfigError("bp: a, b must be nonnegative, not both 0");

  const std::size_t n = g.num_nodes();
  const auto offsets = g.row_offsets();
  const auto cols = g.col_indices();
  const std::size_t arcs = cols.size();
  const auto kk = static_cast<std::size_t>(k);

  // reverse[p]: slot of the opposite arc
  std::vector<std::size_t> reverse(arcs);
  for (std::size_t i = 0; i < n; ++i)
    for (auto p = offsets[i]; p < offsets[i + 1]; ++p) {
      const NodeId j = cols[p];
      const auto begin = cols.begin() + offsets[j], end = cols.begin() + offsets[j + 1];
      reverse[p] = static_cast<std::size_t>(std::lower_bound(begin, end, static_cast<NodeId>(i)) - cols.begin());
    }

  BpState st;
  st.messages = initial ? *initial : bp_initial_messages(g, k, cfg);
  if (st.messages.rows() != arcs || st.messages.cols() != kk)
    throw ShapeError("bp: initial messages must be 2m x k");
  st.marginals = FeatureMatrix(n, kk);
  st.field.assign(kk, 0.0);

  const double log_prior = -std::log(static_cast<double>(k));
  // log sum_r c_rs psi_r for the message in slot p, per class s
  FeatureMatrix edge_log(arcs, kk);
  FeatureMatrix node_log(n, kk);
  std::vector<double> logp(kk), prob(kk);

  auto refresh = [&] {
    for (std::size_t p = 0; p < arcs; ++p) {
      double total = 0;
      for (std::size_t r = 0; r < kk; ++r) total += st.messages(p, r);
      for (std::size_t s = 0; s < kk; ++s) {
        // c_rs psi_r summed over r = b * total + (a - b) * psi_s
        const double v = b * total + (a - b) * st.messages(p, s);
        edge_log(p, s) = v > 0 ? std::max(std::log(v), kLogFloor) : kLogFloor;
      }
    }
    node_log.fill(0);
    for (std::size_t i = 0; i < n; ++i)
      for (auto p = offsets[i]; p < offsets[i + 1]; ++p) {
        const std::size_t in = reverse[p];  // message cols[p] -> i
        for (std::size_t s = 0; s < kk; ++s) node_log(i, s) += edge_log(in, s);
      }
  };
  auto refresh_marginals = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t s = 0; s < kk; ++s) logp[s] = log_prior - st.field[s] + node_log(i, s);
      softmax_row(logp.data(), &st.marginals(i, 0), k);
    }
  };

  // Self-consistent field: h_s = (1/n) sum_i sum_r c_rs psi^i_r, where the
  // marginals psi^i themselves depend on h. Solved by Newton in k
  // dimensions for the current messages. Iterating it one sweep at a time
  // instead lets the global magnetization oscillate under parallel updates.
  auto solve_field = [&] {
    std::fill(st.field.begin(), st.field.end(), 0.0);
    if (!cfg.external_field || n == 0) {
      refresh_marginals();
      return;
    }
    std::vector<double> col(kk), resid(kk);
    std::vector<std::vector<double>> cov(kk, std::vector<double>(kk));
    for (int newton = 0; newton < 50; ++newton) {
      refresh_marginals();
      std::fill(col.begin(), col.end(), 0.0);
      for (auto& row : cov) std::fill(row.begin(), row.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t r = 0; r < kk; ++r) {
          const double pr = st.marginals(i, r);
          col[r] += pr;
          cov[r][r] += pr;
          for (std::size_t t = 0; t < kk; ++t) cov[r][t] -= pr * st.marginals(i, t);
        }
      const double inv_n = 1.0 / static_cast<double>(n);
      double total = 0;
      for (double v : col) total += v;
      double worst = 0;
      for (std::size_t s = 0; s < kk; ++s) {
        resid[s] = st.field[s] - (b * total + (a - b) * col[s]) * inv_n;
        worst = std::max(worst, std::abs(resid[s]));
      }
      if (worst < 1e-13) break;
      // Jacobian of resid: I + C S with S = (1/n) sum_i (diag psi_i - psi_i psi_i^T).
      std::vector<std::vector<double>> jac(kk, std::vector<double>(kk + 1));
      for (std::size_t s = 0; s < kk; ++s) {
        for (std::size_t t = 0; t < kk; ++t) {
          double cs = 0;
          for (std::size_t r = 0; r < kk; ++r) cs += (r == s ? a : b) * cov[r][t];
          jac[s][t] = (s == t ? 1.0 : 0.0) + cs * inv_n;
        }
        jac[s][kk] = -resid[s];
      }
      // Gaussian elimination with partial pivoting.
      for (std::size_t c = 0; c < kk; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < kk; ++r)
          if (std::abs(jac[r][c]) > std::abs(jac[piv][c])) piv = r;
        std::swap(jac[c], jac[piv]);
        if (std::abs(jac[c][c]) < 1e-300) break;
        for (std::size_t r = 0; r < kk; ++r) {
          if (r == c) continue;
          const double f = jac[r][c] / jac[c][c];
          for (std::size_t t = c; t <= kk; ++t) jac[r][t] -= f * jac[c][t];
        }
      }
      for (std::size_t s = 0; s < kk; ++s) {
        const double step = jac[s][s] != 0 ? jac[s][kk] / jac[s][s] : 0.0;
        st.field[s] += std::clamp(step, -5.0, 5.0);
      }
    }
  };

  refresh();
  solve_field();

  FeatureMatrix next(arcs, kk);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng order_rng = make_rng(cfg.seed, 0x5e9);
  std::vector<double> old_marg(kk);
  for (st.iterations = 0; st.iterations < cfg.max_iter;) {
    double change = 0;
    if (cfg.schedule == BpSchedule::parallel) {
      for (std::size_t i = 0; i < n; ++i)
        for (auto p = offsets[i]; p < offsets[i + 1]; ++p) {
          // i -> j excludes the term carried by j -> i
          const std::size_t back = reverse[p];
          for (std::size_t s = 0; s < kk; ++s)
            logp[s] = log_prior - st.field[s] + node_log(i, s) - edge_log(back, s);
          softmax_row(logp.data(), prob.data(), k);
          for (std::size_t s = 0; s < kk; ++s)
            next(p, s) = cfg.damping * st.messages(p, s) + (1 - cfg.damping) * prob[s];
        }
      for (std::size_t x = 0; x < next.size(); ++x)
        change = std::max(change, std::abs(next.data()[x] - st.messages.data()[x]));
      std::swap(st.messages, next);
      refresh();
      solve_field();
    } else {
      // Node by node in random order; the field follows each marginal update.
      std::shuffle(order.begin(), order.end(), order_rng);
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t i : order) {
        for (std::size_t s = 0; s < kk; ++s) node_log(i, s) = 0;
        for (auto p = offsets[i]; p < offsets[i + 1]; ++p)
          for (std::size_t s = 0; s < kk; ++s) node_log(i, s) += edge_log(reverse[p], s);
        for (auto p = offsets[i]; p < offsets[i + 1]; ++p) {
          const std::size_t back = reverse[p];
          for (std::size_t s = 0; s < kk; ++s)
            logp[s] = log_prior - st.field[s] + node_log(i, s) - edge_log(back, s);
          softmax_row(logp.data(), prob.data(), k);
          double total = 0;
          for (std::size_t s = 0; s < kk; ++s) {
            const double v = cfg.damping * st.messages(p, s) + (1 - cfg.damping) * prob[s];
            change = std::max(change, std::abs(v - st.messages(p, s)));
            st.messages(p, s) = v;
            total += v;
          }
          for (std::size_t s = 0; s < kk; ++s) {
            const double v = b * total + (a - b) * st.messages(p, s);
            edge_log(p, s) = v > 0 ? std::max(std::log(v), kLogFloor) : kLogFloor;
          }
        }
        for (std::size_t s = 0; s < kk; ++s) {
          old_marg[s] = st.marginals(i, s);
          logp[s] = log_prior - st.field[s] + node_log(i, s);
        }
        softmax_row(logp.data(), &st.marginals(i, 0), k);
        if (cfg.external_field) {
          double dtotal = 0;
          for (std::size_t s = 0; s < kk; ++s) dtotal += st.marginals(i, s) - old_marg[s];
          for (std::size_t s = 0; s < kk; ++s)
            st.field[s] += (b * dtotal + (a - b) * (st.marginals(i, s) - old_marg[s])) * inv_n;
        }
      }
    }
    ++st.iterations;
    st.last_change = change;
    if (!std::isfinite(change)) throw std::runtime_error("bp: non-finite messages");
    if (change < cfg.tol) {
      st.converged = true;
      break;
    }
  }
  return st;
}

Labeling bp_predict(const BpState& state) {
  const auto& m = state.marginals;
  Labeling out(m.rows(), 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < m.cols(); ++c)
      if (m(i, c) > m(i, best)) best = c;
    out[i] = static_cast<std::int32_t>(best);
  }
  return out;
}

}  // namespace cdgnn

#include "cdgnn/train.hpp"

#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>

#include "cdgnn/overlap.hpp"
#include "cdgnn/rng.hpp"

namespace cdgnn {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (!(lr > 0)) throw ConfigError("train: lr must be > 0");
  if (subgroup < 0) throw ConfigError("train: subgroup must be >= 0");
}

namespace {

std::size_t footprint(const GraphInputs& in) {
  std::size_t nnz = 0;
  for (const auto& p : in.powers) nnz += p.col_indices().size();
  for (const auto& p : in.line_powers) nnz += p.col_indices().size();
  return nnz * sizeof(NodeId);
}

double norm(const Matrix<float>& m) {
  double s = 0;
  for (float v : m.values()) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

std::string diagnostics(const nn::ParamStore<float>& ps) {
  std::ostringstream out;
  out << "array norms (value / grad):";
  for (const auto& e : ps.entries()) out << "\n  " << e.name << ": " << norm(e.value) << " / " << norm(e.grad);
  return out.str();
}

}  // namespace

Labeling gnn_predict(const nn::ParamStore<float>& params, const GnnModelSpec& spec, const SparseGraph& g) {
  return predict(gnn_probabilities(params, spec, prepare_inputs(g, spec)));
}

double gnn_mean_overlap(const nn::ParamStore<float>& params, const GnnModelSpec& spec,
                        const std::vector<LabeledGraph>& graphs) {
  if (graphs.empty()) return NAN;
  double total = 0;
  for (const auto& s : graphs) total += overlap(s.truth, gnn_predict(params, spec, s.graph), spec.classes).overlap;
  return total / static_cast<double>(graphs.size());
}

TrainRun train(const std::vector<LabeledGraph>& train_set, const std::vector<LabeledGraph>& val_set,
               const GnnModelSpec& spec, const TrainConfig& cfg) {
  spec.validate();
  cfg.validate();
  if (train_set.empty()) throw ConfigError("train: the training set is empty");
  if (cfg.loss == LossKind::exact && spec.classes > 6)
    throw ConfigError("train: exact loss needs classes <= 6, use the cheap loss");

  TrainRun run;
  run.spec = spec;
  run.config = cfg;
  nn::ParamStore<float> ps = init_params<float>(spec, derive_seed(cfg.seed, 1));
  nn::Adamax<float> opt(nn::AdamaxConfig{cfg.lr});
  run.best_params = ps;
  run.best_val_overlap = -INFINITY;

  std::vector<std::unique_ptr<GraphInputs>> cache(train_set.size());
  std::size_t cached_bytes = 0;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(cfg.seed, 2);

  double window_loss = 0;
  std::size_t window_steps = 0;
  auto evaluate = [&](int epoch) {
    const double val = gnn_mean_overlap(ps, spec, val_set);
    const double tl = window_steps ? window_loss / static_cast<double>(window_steps) : NAN;
    run.curve.push_back({epoch, run.steps, tl, val});
    window_loss = 0;
    window_steps = 0;
    if (val_set.empty() || val > run.best_val_overlap) {
      run.best_val_overlap = val_set.empty() ? NAN : val;
      run.best_params = ps;
      run.best_step = run.steps;
      if (!cfg.checkpoint_path.empty()) save_model(cfg.checkpoint_path, spec, ps);
    }
    if (cfg.on_eval) cfg.on_eval(epoch, run.steps, tl, val);
  };

  bool done = false;
  for (int epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      const LabeledGraph& s = train_set[idx];
      std::unique_ptr<GraphInputs> local;
      const GraphInputs* in = cache[idx].get();
      if (!in) {
        local = std::make_unique<GraphInputs>(prepare_inputs(s.graph, spec));
        const std::size_t bytes = footprint(*local);
        if (cached_bytes + bytes <= cfg.cache_limit) {
          cached_bytes += bytes;
          cache[idx] = std::move(local);
          in = cache[idx].get();
        } else {
          in = local.get();
        }
      }
      ps.zero_grad();
      nn::Tape<float> tape;
      const nn::Var lp = gnn_forward(tape, ps, spec, *in).log_probs;
      const nn::Var loss = cfg.loss == LossKind::exact
                               ? perm_invariant_loss(tape, lp, s.truth, spec.classes)
                               : cheap_perm_loss(tape, lp, s.truth, spec.classes, std::min(cfg.subgroup, spec.classes));
      const double value = tape.value(loss)(0, 0);
      if (!std::isfinite(value))
        throw nn::NumericError("train: non-finite loss at step " + std::to_string(run.steps) + " (sample " +
                               std::to_string(idx) + ")\n" + diagnostics(ps));
      tape.backward(loss);
      try {
        opt.step(ps);
      } catch (const nn::NumericError& e) {
        throw nn::NumericError(std::string(e.what()) + " at step " + std::to_string(run.steps) + "\n" +
                               diagnostics(ps));
      }
      const double per_node = value / static_cast<double>(std::max<std::size_t>(1, s.graph.num_nodes()));
      run.step_losses.push_back(per_node);
      window_loss += per_node;
      ++window_steps;
      ++run.steps;
      if (cfg.eval_every && run.steps % cfg.eval_every == 0) evaluate(epoch);
      if (cfg.max_steps && run.steps >= cfg.max_steps) {
        done = true;
        break;
      }
    }
    if (!cfg.eval_every || window_steps) evaluate(epoch);
  }
  run.final_params = ps;
  return run;
}

}  // namespace cdgnn

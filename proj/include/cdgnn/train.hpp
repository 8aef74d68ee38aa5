#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cdgnn/generators.hpp"
#include "cdgnn/gnn.hpp"

namespace cdgnn {

enum class LossKind { exact, cheap };

struct TrainConfig {
  int epochs = 10;
  double lr = 0.001;
  std::uint64_t seed = 0;          // parameter init and sample order
  LossKind loss = LossKind::exact;
  int subgroup = 0;                // cheap loss only
  std::size_t max_steps = 0;       // 0: no cap; otherwise stop after this many updates
  std::size_t eval_every = 0;      // steps between validation passes; 0: once per epoch
  std::size_t cache_limit = 200'000'000;  // bytes of per-graph operators kept across epochs
  std::string checkpoint_path;     // best-validation model, written when set
  /// Called after every validation pass.
  std::function<void(int epoch, std::size_t step, double train_loss, double val_overlap)> on_eval;

  void validate() const;
};

struct EvalPoint {
  int epoch;
  std::size_t step;
  double train_loss;   // mean per-node loss since the previous point
  double val_overlap;  // mean over the validation graphs; NaN without any
};

struct TrainRun {
  GnnModelSpec spec;
  TrainConfig config;
  std::vector<EvalPoint> curve;
  std::vector<double> step_losses;  // per-node loss of every update
  nn::ParamStore<float> final_params;
  nn::ParamStore<float> best_params;  // best validation overlap (final when no validation set)
  double best_val_overlap = 0;
  std::size_t best_step = 0;
  std::size_t steps = 0;
};

/// Single-graph Adamax training on the permutation-invariant loss. Throws
/// ConfigError on an empty dataset and nn::NumericError, with parameter and
/// gradient norms per array, when the loss or a gradient stops being finite.
TrainRun train(const std::vector<LabeledGraph>& train_set, const std::vector<LabeledGraph>& val_set,
               const GnnModelSpec& spec, const TrainConfig& cfg);

/// Labels from a trained model.
Labeling gnn_predict(const nn::ParamStore<float>& params, const GnnModelSpec& spec, const SparseGraph& g);

/// Mean overlap of gnn_predict over `graphs`.
double gnn_mean_overlap(const nn::ParamStore<float>& params, const GnnModelSpec& spec,
                        const std::vector<LabeledGraph>& graphs);

}  // namespace cdgnn

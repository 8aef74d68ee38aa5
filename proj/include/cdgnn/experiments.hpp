#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cdgnn/bp.hpp"
#include "cdgnn/config.hpp"
#include "cdgnn/csv.hpp"
#include "cdgnn/gnn.hpp"

namespace cdgnn {

enum class Detector { laplacian, bh_assoc, bh_disassoc, pm, bp, gnn };

Detector parse_detector(const std::string& name);
std::string to_string(Detector d);

struct DetectorContext {
  std::size_t pm_layers = 20;
  BpConfig bp;
  const nn::ParamStore<float>* gnn_params = nullptr;
  const GnnModelSpec* gnn_spec = nullptr;
  std::uint64_t seed = 0;
};

/// Labels from one detector. BP is given the generating (a, b) from the
/// sample metadata; every other detector sees only the graph.
Labeling run_detector(Detector d, const LabeledGraph& sample, int k, const DetectorContext& ctx);

struct Score {
  std::size_t graphs = 0;
  double overlap_mean = 0, overlap_std = 0;
  double accuracy_mean = 0, accuracy_std = 0;
};

/// Mean and sample standard deviation over `graphs`, in graph order.
Score score_detector(Detector d, const std::vector<LabeledGraph>& graphs, int k, const DetectorContext& ctx);

struct SweepSpec {
  std::vector<Detector> detectors{Detector::bh_assoc};
  std::vector<double> snr_grid;  // rates from (snr, dbar)
  std::vector<RatePair> pairs;   // explicit (a, b), used when snr_grid is empty
  std::size_t graphs_per_point = 20;
  std::size_t n = 1000;
  int k = 2;
  double dbar = 4;
  bool associative = true;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError on an empty grid
};

/// `points` equally spaced values from lo to hi inclusive.
std::vector<double> linear_grid(double lo, double hi, std::size_t points);

/// One row per (detector, grid point):
/// detector,snr,a,b,n,k,graphs,overlap_mean,overlap_std,accuracy_mean,accuracy_std.
/// Graph seeds depend on (seed, grid index, graph index) only, so every
/// detector sees the same graphs.
CsvTable sweep(const SweepSpec& spec, const DetectorContext& ctx);

struct ExperimentOptions {
  bool full = false;              // full scale instead of desk scale
  std::uint64_t seed = 0;
  std::string out_dir;            // CSV, summary and models; nothing written when empty
  Settings settings;              // overrides of the experiment defaults
  std::ostream* log = nullptr;    // progress
  /// Subset of the experiment's parts to run (see experiment_parts); empty
  /// runs all of them.
  std::vector<std::string> parts;
};

struct ExperimentReport {
  std::string name;
  /// experiment,detector,setting,graphs,overlap_mean,overlap_std,
  /// accuracy_mean,accuracy_std,reference
  CsvTable table;
  std::string summary;
  /// "<detector>/<setting>/overlap" and ".../accuracy" for every row.
  std::map<std::string, double> metrics;
};

/// sbm_k2, sbm_disassoc, comp_stat_k5, gbm or snap. Throws ConfigError for an
/// unknown name, and for snap when the data files are missing (the message
/// lists the paths that were tried).
ExperimentReport run_experiment(const std::string& name, const ExperimentOptions& opts);
const std::vector<std::string>& experiment_names();
/// Parts of an experiment in run order, e.g. {"sweep", "mixture"} for sbm_k2.
const std::vector<std::string>& experiment_parts(const std::string& name);

/// Default SNAP file locations under `dir`: com-amazon.ungraph.txt[.gz] and
/// com-amazon.top5000.cmty.txt[.gz].
std::pair<std::string, std::string> find_snap_files(const std::string& dir, std::vector<std::string>* tried);

}  // namespace cdgnn

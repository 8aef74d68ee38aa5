#include "cdgnn/experiments.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "cdgnn/overlap.hpp"
#include "cdgnn/rng.hpp"
#include "cdgnn/snap.hpp"
#include "cdgnn/spectral.hpp"
#include "cdgnn/train.hpp"

namespace cdgnn {
namespace {

// Runs fn(i) for i < count on up to hardware_concurrency threads. Each index
// writes only its own slot, so results come back in index order.
template <class F>
void parallel_for(std::size_t count, F&& fn) {
  const std::size_t threads = std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += threads) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? NAN : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string fixed(double v, int digits = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// Shared state of one experiment run.
struct Run {
  explicit Run(const ExperimentOptions& o) : opts(o) {}

  const ExperimentOptions& opts;
  ExperimentReport report;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  const Settings& set() const { return opts.settings; }
  bool wants(const std::string& part) const {
    return opts.parts.empty() || std::find(opts.parts.begin(), opts.parts.end(), part) != opts.parts.end();
  }
  std::uint64_t seed(std::uint64_t stream) const { return derive_seed(opts.seed, stream); }

  void log(const std::string& line) const {
    if (!opts.log) return;
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    *opts.log << "[" << report.name << " " << fixed(t, 0) << "s] " << line << std::endl;
  }

  void add(Detector d, const std::string& setting, const Score& s, const std::string& reference) {
    const std::string det = to_string(d);
    report.table.rows.push_back({report.name, det, setting, std::to_string(s.graphs), format_real(s.overlap_mean),
                                 format_real(s.overlap_std), format_real(s.accuracy_mean),
                                 format_real(s.accuracy_std), reference});
    report.metrics[det + "/" + setting + "/overlap"] = s.overlap_mean;
    report.metrics[det + "/" + setting + "/accuracy"] = s.accuracy_mean;
    std::ostringstream os;
    os << det << " " << setting << ": overlap " << fixed(s.overlap_mean) << " +- " << fixed(s.overlap_std)
       << ", accuracy " << fixed(s.accuracy_mean) << " +- " << fixed(s.accuracy_std) << " over " << s.graphs
       << " graphs";
    if (!reference.empty()) os << " (reference " << reference << ")";
    summary << os.str() << "\n";
    log(os.str());
  }

  std::string path(const std::string& file) const {
    return (std::filesystem::path(opts.out_dir) / file).string();
  }

  void write_extra(const std::string& file, const CsvTable& t) const {
    if (!opts.out_dir.empty()) write_csv(path(file), t);
  }

  std::ostringstream summary;
};

GnnModelSpec model_spec(const Settings& s, int classes, int depth, GnnVariant variant, int line_j) {
  GnnModelSpec m;
  m.classes = classes;
  m.depth = s.get_int("model.depth", depth);
  m.width = s.get_int("model.width", m.width);
  m.J = s.get_int("model.J", m.J);
  m.variant = s.has("model.variant") ? parse_gnn_variant(s.get("model.variant", "")) : variant;
  m.line_J = s.get_int("model.line_J", line_j);
  m.scalar_coupling = s.get_bool("model.scalar_coupling", m.scalar_coupling);
  m.edge_input = s.has("model.edge_input") ? parse_edge_input(s.get("model.edge_input", "")) : m.edge_input;
  m.bn_affine = s.get_bool("model.bn_affine", m.bn_affine);
  m.validate();
  return m;
}

TrainConfig train_config(const Run& run, int epochs, std::uint64_t stream, const std::string& tag) {
  const Settings& s = run.set();
  TrainConfig tc;
  tc.epochs = s.get_int("train.epochs", epochs);
  tc.lr = s.get_double("train.lr", tc.lr);
  tc.seed = run.seed(stream);
  const std::string loss = s.get("train.loss", "exact");
  if (loss == "cheap")
    tc.loss = LossKind::cheap;
  else if (loss != "exact")
    throw ConfigError("train.loss must be exact or cheap, got '" + loss + "'");
  tc.subgroup = s.get_int("train.subgroup", 0);
  tc.max_steps = s.get_size("train.max_steps", 0);
  tc.eval_every = s.get_size("train.eval_every", 0);
  if (!run.opts.out_dir.empty()) tc.checkpoint_path = run.path(run.report.name + "_" + tag + ".ckpt");
  tc.on_eval = [&run, tag](int epoch, std::size_t step, double loss_v, double val) {
    run.log(tag + " epoch " + std::to_string(epoch) + " step " + std::to_string(step) + " loss " + fixed(loss_v, 4) +
            " val overlap " + fixed(val));
  };
  return tc;
}

struct Trained {
  GnnModelSpec spec;
  nn::ParamStore<float> params;
};

Trained fit(Run& run, const std::vector<LabeledGraph>& data, const std::vector<LabeledGraph>& val,
            const GnnModelSpec& spec, const TrainConfig& tc, const std::string& tag) {
  run.log(tag + ": training on " + std::to_string(data.size()) + " graphs, depth " + std::to_string(spec.depth) +
          ", " + std::to_string(tc.epochs) + " epochs");
  auto tr = train(data, val, spec, tc);
  run.log(tag + ": best validation overlap " + fixed(tr.best_val_overlap) + " at step " +
          std::to_string(tr.best_step));
  return {spec, std::move(tr.best_params)};
}

std::vector<LabeledGraph> sbm_graphs(const SbmConfig& cfg, std::size_t count, std::uint64_t seed) {
  std::vector<LabeledGraph> out(count);
  parallel_for(count, [&](std::size_t i) { out[i] = sample_sbm(cfg, derive_seed(seed, i)); });
  return out;
}

std::vector<LabeledGraph> mixture_graphs(MixtureConfig cfg, std::size_t count, std::uint64_t seed) {
  cfg.count = count;
  return sample_sbm_mixture(cfg, seed);
}

std::vector<LabeledGraph> gbm_graphs(const GbmConfig& cfg, std::size_t count, std::uint64_t seed) {
  std::vector<LabeledGraph> out(count);
  parallel_for(count, [&](std::size_t i) { out[i] = sample_gbm(cfg, derive_seed(seed, i)); });
  return out;
}

DetectorContext base_context(const Run& run, std::uint64_t stream, std::size_t pm_layers) {
  DetectorContext ctx;
  ctx.seed = run.seed(stream);
  ctx.pm_layers = run.set().get_size("sweep.pm_layers", pm_layers);
  return ctx;
}

SweepSpec sweep_spec(const Run& run, bool associative, const std::vector<Detector>& detectors) {
  const Settings& s = run.set();
  SweepSpec sp;
  std::vector<Detector> dets;
  for (const auto& name : s.get_list("sweep.detectors", {})) dets.push_back(parse_detector(name));
  sp.detectors = dets.empty() ? detectors : dets;
  sp.snr_grid = linear_grid(s.get_double("sweep.snr_min", 0.5), s.get_double("sweep.snr_max", 4.0),
                            s.get_size("sweep.points", 8));
  sp.graphs_per_point = s.get_size("sweep.graphs", 20);
  sp.n = s.get_size("data.n", 1000);
  sp.k = 2;
  sp.dbar = s.get_double("data.dbar", 4);
  sp.associative = associative;
  sp.seed = run.seed(11);
  return sp;
}

// One report row per sweep row, setting "snr=<value>".
void add_sweep(Run& run, const CsvTable& t, const std::string& reference) {
  const auto det = t.column("detector"), snr = t.column("snr"), graphs = t.column("graphs");
  const auto om = t.column("overlap_mean"), os = t.column("overlap_std");
  const auto am = t.column("accuracy_mean"), as = t.column("accuracy_std");
  for (const auto& r : t.rows) {
    Score sc;
    sc.graphs = std::stoul(r[graphs]);
    sc.overlap_mean = std::stod(r[om]);
    sc.overlap_std = std::stod(r[os]);
    sc.accuracy_mean = std::stod(r[am]);
    sc.accuracy_std = std::stod(r[as]);
    run.add(parse_detector(r[det]), "snr=" + r[snr], sc, reference);
  }
}

// Fixed-degree SNR mixture, desk or full scale.
MixtureConfig mixture_config(const Run& run, double disassociative_fraction) {
  const Settings& s = run.set();
  MixtureConfig mc;
  mc.n = s.get_size("data.n", run.opts.full ? 1000 : 400);
  mc.dbar = s.get_double("data.dbar", 3);
  mc.randomize_dbar = s.get_bool("data.randomize_dbar", false);
  mc.disassociative_fraction = s.get_double("data.disassociative_fraction", disassociative_fraction);
  return mc;
}

Trained fit_mixture(Run& run, double disassociative_fraction) {
  const Settings& s = run.set();
  const bool full = run.opts.full;
  const MixtureConfig mc = mixture_config(run, disassociative_fraction);
  const auto data = mixture_graphs(mc, s.get_size("data.count", full ? 6000 : 1500), run.seed(21));
  const auto val = mixture_graphs(mc, s.get_size("data.val_count", 40), run.seed(22));
  const auto spec = model_spec(s, 2, full ? 30 : 20, GnnVariant::node_only, 3);
  return fit(run, data, val, spec, train_config(run, full ? 10 : 12, 23, "mixture"), "mixture");
}

void sbm_k2(Run& run) {
  const Settings& s = run.set();
  if (run.wants("sweep")) {
    auto sp = sweep_spec(run, true, {Detector::laplacian, Detector::bh_assoc, Detector::pm});
    run.log("sweep over " + std::to_string(sp.snr_grid.size()) + " SNR points, " +
            std::to_string(sp.graphs_per_point) + " graphs each");
    const auto t = sweep(sp, base_context(run, 12, 20));
    run.write_extra("sbm_k2_sweep.csv", t);
    add_sweep(run, t, "");
  }
  if (run.wants("mixture")) {
    const auto model = fit_mixture(run, 0.0);
    const auto mc = mixture_config(run, 0.0);
    DetectorContext ctx = base_context(run, 24, static_cast<std::size_t>(model.spec.depth));
    ctx.gnn_params = &model.params;
    ctx.gnn_spec = &model.spec;
    const std::size_t count = s.get_size("data.test_count", 20);
    std::uint64_t stream = 30;
    for (double v : {1.5, 2.0, 3.0}) {
      const auto r = rates_for_snr(v, mc.dbar, 2, true);
      SbmConfig c;
      c.n = mc.n;
      c.a = r.a;
      c.b = r.b;
      const auto graphs = sbm_graphs(c, count, run.seed(stream++));
      for (Detector d : {Detector::gnn, Detector::bh_assoc, Detector::pm})
        run.add(d, "mixture snr=" + format_real(v), score_detector(d, graphs, 2, ctx), "");
    }
  }
}

void sbm_disassoc(Run& run) {
  const Settings& s = run.set();
  if (run.wants("sweep")) {
    auto sp = sweep_spec(run, false, {Detector::bh_assoc, Detector::bh_disassoc});
    run.log("disassociative sweep over " + std::to_string(sp.snr_grid.size()) + " SNR points");
    const auto t = sweep(sp, base_context(run, 12, 20));
    run.write_extra("sbm_disassoc_sweep.csv", t);
    add_sweep(run, t, "");
  }
  if (run.wants("mixture")) {
    const auto model = fit_mixture(run, 0.5);
    const auto mc = mixture_config(run, 0.5);
    DetectorContext ctx = base_context(run, 24, static_cast<std::size_t>(model.spec.depth));
    ctx.gnn_params = &model.params;
    ctx.gnn_spec = &model.spec;
    const std::size_t count = s.get_size("data.test_count", 20);
    const double v = s.get_double("data.snr", 3.0);
    for (bool assoc : {true, false}) {
      const auto r = rates_for_snr(v, mc.dbar, 2, assoc);
      SbmConfig c;
      c.n = mc.n;
      c.a = r.a;
      c.b = r.b;
      const auto graphs = sbm_graphs(c, count, run.seed(assoc ? 31 : 32));
      const std::string setting = std::string(assoc ? "assoc" : "disassoc") + " snr=" + format_real(v);
      for (Detector d : {Detector::gnn, Detector::bh_assoc, Detector::bh_disassoc})
        run.add(d, setting, score_detector(d, graphs, 2, ctx), "");
    }
  }
}

void comp_stat_k5(Run& run) {
  const Settings& s = run.set();
  const bool full = run.opts.full;
  SbmConfig c;
  c.n = s.get_size("data.n", 1000);
  c.k = 5;
  c.a = s.get_double("data.a", 0);
  c.b = s.get_double("data.b", 18);
  const auto test = sbm_graphs(c, s.get_size("data.test_count", 10), run.seed(40));
  const std::string setting = "n=" + std::to_string(c.n);
  DetectorContext ctx = base_context(run, 41, 20);
  if (run.wants("spectral")) {
    run.add(Detector::bp, setting, score_detector(Detector::bp, test, 5, ctx), "0.304+-0.03");
    run.add(Detector::bh_disassoc, setting, score_detector(Detector::bh_disassoc, test, 5, ctx), "");
  }
  if (!run.wants("gnn")) return;
  const auto data = sbm_graphs(c, s.get_size("data.count", full ? 2000 : 300), run.seed(42));
  const auto val = sbm_graphs(c, s.get_size("data.val_count", 10), run.seed(43));
  const int depth = full ? 30 : 20;
  const std::pair<GnnVariant, const char*> variants[] = {{GnnVariant::node_only, "0.295+-0.005"},
                                                         {GnnVariant::line_graph, "0.301+-0.005"}};
  for (const auto& [variant, reference] : variants) {
    const std::string tag = variant == GnnVariant::node_only ? "node" : "line";
    GnnModelSpec spec = model_spec(s, 5, depth, variant, full ? 3 : 1);
    spec.variant = variant;
    TrainConfig tc = train_config(run, full ? 6 : 3, 44, tag);
    // near chance the validation overlap is noisy, so select among many checkpoints
    if (!s.has("train.eval_every")) tc.eval_every = 100;
    const auto model = fit(run, data, val, spec, tc, tag);
    ctx.gnn_params = &model.params;
    ctx.gnn_spec = &model.spec;
    run.add(Detector::gnn, setting + " " + tag, score_detector(Detector::gnn, test, 5, ctx), reference);
  }
}

void gbm(Run& run) {
  const Settings& s = run.set();
  const bool full = run.opts.full;
  // Reference values for (Laplacian, Bethe Hessian, GNN) at S = 1, 2, 4.
  const std::map<std::string, std::array<const char*, 3>> reference = {
      {"1", {"0.51+-0.005", "0.59+-0.01", "0.595+-0.004"}},
      {"2", {"0.51+-0.006", "0.69+-0.01", "0.72+-0.005"}},
      {"4", {"0.51+-0.01", "0.69+-0.02", "0.865+-0.005"}},
  };
  std::vector<std::string> separations = s.get_list("data.separation", {"1", "2", "4"});
  std::uint64_t stream = 50;
  for (const auto& sep : separations) {
    stream += 10;
    if (!run.wants("S=" + sep)) continue;
    GbmConfig gc;
    gc.n = s.get_size("data.n", 1000);
    gc.separation = std::stod(sep);
    gc.radius = s.get_double("data.radius", gc.radius);
    const auto it = reference.find(sep);
    const auto ref = [&](int i) { return it == reference.end() ? std::string() : std::string(it->second[i]); };
    const auto test = gbm_graphs(gc, s.get_size("data.test_count", 10), run.seed(stream));
    DetectorContext ctx = base_context(run, stream + 1, 20);
    const std::string setting = "S=" + sep;
    run.add(Detector::laplacian, setting, score_detector(Detector::laplacian, test, 2, ctx), ref(0));
    run.add(Detector::bh_assoc, setting, score_detector(Detector::bh_assoc, test, 2, ctx), ref(1));
    const auto data = gbm_graphs(gc, s.get_size("data.count", 500), run.seed(stream + 2));
    const auto val = gbm_graphs(gc, s.get_size("data.val_count", 10), run.seed(stream + 3));
    const auto spec = model_spec(s, 2, full ? 30 : 20, GnnVariant::node_only, 3);
    const auto model = fit(run, data, val, spec, train_config(run, full ? 10 : 6, stream + 4, setting), setting);
    ctx.gnn_params = &model.params;
    ctx.gnn_spec = &model.spec;
    run.add(Detector::gnn, setting, score_detector(Detector::gnn, test, 2, ctx), ref(2));
  }
}

std::vector<LabeledGraph> samples_of(const std::vector<SnapSample>& v) {
  std::vector<LabeledGraph> out;
  out.reserve(v.size());
  for (const auto& s : v) out.push_back(s.sample);
  return out;
}

void snap(Run& run) {
  const Settings& s = run.set();
  const bool full = run.opts.full;
  std::string edges = s.get("data.snap_edges", ""), comms = s.get("data.snap_communities", "");
  if (edges.empty() || comms.empty()) {
    std::vector<std::string> tried;
    auto found = find_snap_files(s.get("data.dir", "data/snap"), &tried);
    if (edges.empty()) edges = found.first;
    if (comms.empty()) comms = found.second;
    if (edges.empty() || comms.empty()) {
      std::string msg = "snap: com-Amazon files not found. Download com-amazon.ungraph.txt.gz and "
                        "com-amazon.top5000.cmty.txt.gz from snap.stanford.edu and pass --data.dir, or set "
                        "data.snap_edges and data.snap_communities. Tried:";
      for (const auto& p : tried) msg += "\n  " + p;
      throw ConfigError(msg);
    }
  }
  for (const auto& f : {edges, comms})
    if (!std::filesystem::exists(f)) throw ConfigError("snap: file not found: " + f);
  run.log("reading " + edges + " and " + comms);
  SnapCaps caps;
  caps.seed = run.seed(70);
  const auto ds = snap_build(edges, comms, caps);
  for (const auto& w : ds.warnings) run.log("warning: " + w);
  double vertices = 0, edge_count = 0;
  for (const auto& part : {&ds.train, &ds.test})
    for (const auto& x : *part) {
      vertices += static_cast<double>(x.sample.graph.num_nodes());
      edge_count += static_cast<double>(x.sample.graph.num_edges());
    }
  const double total = static_cast<double>(ds.train.size() + ds.test.size());
  run.report.metrics["dataset/train/count"] = static_cast<double>(ds.train.size());
  run.report.metrics["dataset/test/count"] = static_cast<double>(ds.test.size());
  run.report.metrics["dataset/all/vertices"] = total > 0 ? vertices / total : 0;
  run.report.metrics["dataset/all/edges"] = total > 0 ? edge_count / total : 0;
  std::ostringstream os;
  os << "subgraphs " << ds.train.size() << " / " << ds.test.size() << " (reference 315 / 35), avg vertices "
     << fixed(run.report.metrics["dataset/all/vertices"], 1) << " (reference 60), avg edges "
     << fixed(run.report.metrics["dataset/all/edges"], 1) << " (reference 346)";
  run.summary << os.str() << "\n";
  run.log(os.str());
  if (ds.train.empty() || ds.test.empty()) throw ConfigError("snap: the split left no train or no test subgraphs");

  // Validation graphs come from the training side so the test set stays untouched.
  auto data = samples_of(ds.train);
  Rng rng = make_rng(run.seed(71));
  std::shuffle(data.begin(), data.end(), rng);
  const std::size_t nval = std::min<std::size_t>(s.get_size("data.val_count", data.size() / 10), data.size() - 1);
  std::vector<LabeledGraph> val(data.end() - static_cast<std::ptrdiff_t>(nval), data.end());
  data.resize(data.size() - nval);
  const auto test = samples_of(ds.test);
  const auto spec = model_spec(s, 3, full ? 30 : 20, GnnVariant::node_only, 3);
  const auto model = fit(run, data, val, spec, train_config(run, full ? 30 : 10, 72, "amazon"), "amazon");
  DetectorContext ctx = base_context(run, 73, 20);
  ctx.gnn_params = &model.params;
  ctx.gnn_spec = &model.spec;
  run.add(Detector::gnn, "amazon", score_detector(Detector::gnn, test, 3, ctx), "0.74+-0.13");
}

const char* kPlotStub = R"(#!/usr/bin/env python3
# Overlap against SNR from a sweep CSV: one line per detector with a std band.
import csv, sys
from collections import defaultdict
import matplotlib.pyplot as plt

rows = defaultdict(list)
with open(sys.argv[1]) as f:
    for r in csv.DictReader(f):
        rows[r["detector"]].append((float(r["snr"]), float(r["overlap_mean"]), float(r["overlap_std"])))
for det, pts in sorted(rows.items()):
    pts.sort()
    x, m, s = zip(*pts)
    plt.plot(x, m, marker="o", label=det)
    plt.fill_between(x, [a - b for a, b in zip(m, s)], [a + b for a, b in zip(m, s)], alpha=0.2)
plt.xlabel("SNR")
plt.ylabel("overlap")
plt.legend()
plt.savefig(sys.argv[2] if len(sys.argv) > 2 else "sweep.png", dpi=150)
)";

}  // namespace

Detector parse_detector(const std::string& name) {
  if (name == "laplacian") return Detector::laplacian;
  if (name == "bh_assoc") return Detector::bh_assoc;
  if (name == "bh_disassoc") return Detector::bh_disassoc;
  if (name == "pm") return Detector::pm;
  if (name == "bp") return Detector::bp;
  if (name == "gnn") return Detector::gnn;
  throw ConfigError("unknown detector '" + name + "' (laplacian, bh_assoc, bh_disassoc, pm, bp, gnn)");
}

std::string to_string(Detector d) {
  switch (d) {
    case Detector::laplacian: return "laplacian";
    case Detector::bh_assoc: return "bh_assoc";
    case Detector::bh_disassoc: return "bh_disassoc";
    case Detector::pm: return "pm";
    case Detector::bp: return "bp";
    case Detector::gnn: return "gnn";
  }
  return "?";
}

Labeling run_detector(Detector d, const LabeledGraph& sample, int k, const DetectorContext& ctx) {
  SpectralConfig sc;
  sc.seed = ctx.seed;
  switch (d) {
    case Detector::laplacian: return spectral_cluster(sample.graph, k, SpectralMethod::laplacian_sym, sc).labels;
    case Detector::bh_assoc: return spectral_cluster(sample.graph, k, SpectralMethod::bh_assoc, sc).labels;
    case Detector::bh_disassoc: return spectral_cluster(sample.graph, k, SpectralMethod::bh_disassoc, sc).labels;
    case Detector::pm: return truncated_pm_baseline(sample.graph, k, ctx.pm_layers, ctx.seed).labels;
    case Detector::bp: {
      BpConfig cfg = ctx.bp;
      cfg.seed = ctx.seed;
      return bp_predict(bp_sbm(sample.graph, sample.meta.a, sample.meta.b, k, cfg));
    }
    case Detector::gnn:
      if (!ctx.gnn_params || !ctx.gnn_spec) throw ConfigError("gnn detector needs a trained model");
      if (ctx.gnn_spec->classes != k)
        throw ConfigError("gnn model predicts " + std::to_string(ctx.gnn_spec->classes) + " classes, k is " +
                          std::to_string(k));
      return gnn_predict(*ctx.gnn_params, *ctx.gnn_spec, sample.graph);
  }
  throw ConfigError("unknown detector");
}

Score score_detector(Detector d, const std::vector<LabeledGraph>& graphs, int k, const DetectorContext& ctx) {
  std::vector<double> ov(graphs.size()), acc(graphs.size());
  parallel_for(graphs.size(), [&](std::size_t i) {
    DetectorContext local = ctx;
    local.seed = derive_seed(ctx.seed, i);
    const auto r = overlap(graphs[i].truth, run_detector(d, graphs[i], k, local), k);
    ov[i] = r.overlap;
    acc[i] = r.accuracy;
  });
  Score s;
  s.graphs = graphs.size();
  s.overlap_mean = mean_of(ov);
  s.overlap_std = std_of(ov);
  s.accuracy_mean = mean_of(acc);
  s.accuracy_std = std_of(acc);
  return s;
}

void SweepSpec::validate() const {
  if (snr_grid.empty() && pairs.empty()) throw ConfigError("sweep: the grid is empty");
  if (detectors.empty()) throw ConfigError("sweep: no detectors");
  if (graphs_per_point == 0) throw ConfigError("sweep: graphs per point must be >= 1");
  if (k < 2) throw ConfigError("sweep: k must be >= 2");
}

std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
  if (points == 0) throw ConfigError("grid: points must be >= 1");
  if (points == 1) return {lo};
  std::vector<double> out(points);
  for (std::size_t i = 0; i < points; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  out.back() = hi;
  return out;
}

CsvTable sweep(const SweepSpec& spec, const DetectorContext& ctx) {
  spec.validate();
  std::vector<RatePair> pairs = spec.pairs;
  std::vector<double> snrs;
  if (!spec.snr_grid.empty()) {
    pairs.clear();
    for (double v : spec.snr_grid) {
      pairs.push_back(rates_for_snr(v, spec.dbar, spec.k, spec.associative));
      snrs.push_back(v);
    }
  } else {
    for (const auto& p : pairs) snrs.push_back(snr(p.a, p.b, spec.k));
  }
  CsvTable t;
  t.header = {"detector", "snr", "a", "b", "n", "k", "graphs", "overlap_mean", "overlap_std", "accuracy_mean",
              "accuracy_std"};
  std::vector<std::vector<std::vector<std::string>>> rows(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    SbmConfig c;
    c.n = spec.n;
    c.k = spec.k;
    c.a = pairs[p].a;
    c.b = pairs[p].b;
    const auto graphs = sbm_graphs(c, spec.graphs_per_point, derive_seed(spec.seed, p));
    DetectorContext local = ctx;
    local.seed = derive_seed(ctx.seed, p);
    for (Detector d : spec.detectors) {
      const Score s = score_detector(d, graphs, spec.k, local);
      t.rows.push_back({to_string(d), format_real(snrs[p]), format_real(c.a), format_real(c.b),
                        std::to_string(c.n), std::to_string(c.k), std::to_string(s.graphs),
                        format_real(s.overlap_mean), format_real(s.overlap_std), format_real(s.accuracy_mean),
                        format_real(s.accuracy_std)});
    }
  }
  return t;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"sbm_k2", "sbm_disassoc", "comp_stat_k5", "gbm", "snap"};
  return names;
}

const std::vector<std::string>& experiment_parts(const std::string& name) {
  static const std::map<std::string, std::vector<std::string>> parts = {
      {"sbm_k2", {"sweep", "mixture"}},
      {"sbm_disassoc", {"sweep", "mixture"}},
      {"comp_stat_k5", {"spectral", "gnn"}},
      {"gbm", {"S=1", "S=2", "S=4"}},
      {"snap", {"amazon"}},
  };
  const auto it = parts.find(name);
  if (it == parts.end()) throw ConfigError("unknown experiment '" + name + "'");
  return it->second;
}

std::pair<std::string, std::string> find_snap_files(const std::string& dir, std::vector<std::string>* tried) {
  const auto pick = [&](const std::string& stem) {
    for (const auto& file : {stem, stem + ".gz"}) {
      const auto p = (std::filesystem::path(dir) / file).string();
      if (tried) tried->push_back(p);
      if (std::filesystem::exists(p)) return p;
    }
    return std::string();
  };
  auto edges = pick("com-amazon.ungraph.txt");
  auto comms = pick("com-amazon.top5000.cmty.txt");
  return {edges, comms};
}

ExperimentReport run_experiment(const std::string& name, const ExperimentOptions& opts) {
  const auto& parts = experiment_parts(name);
  for (const auto& p : opts.parts)
    if (std::find(parts.begin(), parts.end(), p) == parts.end())
      throw ConfigError("experiment " + name + " has no part '" + p + "'");
  Run run(opts);
  run.report.name = name;
  run.report.table.header = {"experiment", "detector", "setting", "graphs", "overlap_mean", "overlap_std",
                             "accuracy_mean", "accuracy_std", "reference"};
  if (!opts.out_dir.empty()) std::filesystem::create_directories(opts.out_dir);
  run.summary << name << " (" << (opts.full ? "full" : "desk") << " scale, seed " << opts.seed << ")\n";
  if (name == "sbm_k2")
    sbm_k2(run);
  else if (name == "sbm_disassoc")
    sbm_disassoc(run);
  else if (name == "comp_stat_k5")
    comp_stat_k5(run);
  else if (name == "gbm")
    gbm(run);
  else
    snap(run);
  run.report.summary = run.summary.str();
  if (!opts.out_dir.empty()) {
    write_csv(run.path(name + ".csv"), run.report.table);
    std::ofstream(run.path(name + "_summary.txt")) << run.report.summary;
    std::ofstream(run.path("plot_sweep.py")) << kPlotStub;
  }
  return run.report;
}

}  // namespace cdgnn

// Command-line front end: dataset generation, training, evaluation, sweeps
// and the named experiments. Every config key has a --section.key flag.

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cdgnn/config.hpp"
#include "cdgnn/experiments.hpp"
#include "cdgnn/overlap.hpp"
#include "cdgnn/rng.hpp"
#include "cdgnn/snap.hpp"
#include "cdgnn/train.hpp"

using namespace cdgnn;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string config;
  std::map<std::string, std::string> overrides;
};

Settings load_settings(const Globals& g) {
  Settings s = g.config.empty() ? Settings{} : Settings::from_ini(g.config);
  for (const auto& [k, v] : g.overrides) s.set(k, v);
  return s;
}

GnnModelSpec spec_from(const Settings& s, int classes) {
  GnnModelSpec m;
  m.classes = classes;
  m.depth = s.get_int("model.depth", 20);
  m.width = s.get_int("model.width", m.width);
  m.J = s.get_int("model.J", m.J);
  m.variant = parse_gnn_variant(s.get("model.variant", to_string(m.variant)));
  m.line_J = s.get_int("model.line_J", m.line_J);
  m.scalar_coupling = s.get_bool("model.scalar_coupling", m.scalar_coupling);
  m.edge_input = parse_edge_input(s.get("model.edge_input", to_string(m.edge_input)));
  m.bn_affine = s.get_bool("model.bn_affine", m.bn_affine);
  m.validate();
  return m;
}

// SBM rates from data.snr (with data.dbar) when given, else data.a and data.b.
RatePair rates_from(const Settings& s, int k) {
  if (s.has("data.snr"))
    return rates_for_snr(s.get_double("data.snr", 0), s.get_double("data.dbar", 3), k,
                         s.get_bool("data.associative", true));
  return {s.get_double("data.a", 5), s.get_double("data.b", 1)};
}

std::vector<LabeledGraph> split_of(const std::vector<DatasetRecord>& records, const std::string& split) {
  std::vector<LabeledGraph> out;
  for (const auto& r : records)
    if (r.split == split) out.push_back(r.sample);
  return out;
}

int classes_of(const std::vector<LabeledGraph>& graphs) {
  int k = 0;
  for (const auto& g : graphs)
    for (auto y : g.truth) k = std::max(k, static_cast<int>(y) + 1);
  return std::max(k, 2);
}

int cmd_gen(const Globals& g, const std::string& kind, const std::string& out) {
  const Settings s = load_settings(g);
  const std::size_t n = s.get_size("data.n", 400);
  const int k = s.get_int("data.k", 2);
  const std::pair<const char*, std::size_t> splits[] = {{"train", s.get_size("data.count", 100)},
                                                        {"val", s.get_size("data.val_count", 10)},
                                                        {"test", s.get_size("data.test_count", 20)}};
  std::vector<DatasetRecord> records;
  std::uint64_t stream = 0;
  for (const auto& [split, count] : splits) {
    const std::uint64_t seed = derive_seed(g.seed, ++stream);
    std::vector<LabeledGraph> graphs;
    if (kind == "sbm") {
      SbmConfig c;
      c.n = n;
      c.k = k;
      const auto r = rates_from(s, k);
      c.a = r.a;
      c.b = r.b;
      for (std::size_t i = 0; i < count; ++i) graphs.push_back(sample_sbm(c, derive_seed(seed, i)));
    } else if (kind == "mixture") {
      MixtureConfig c;
      c.n = n;
      c.k = k;
      c.dbar = s.get_double("data.dbar", 3);
      c.count = count;
      c.randomize_dbar = s.get_bool("data.randomize_dbar", false);
      c.disassociative_fraction = s.get_double("data.disassociative_fraction", 0);
      graphs = sample_sbm_mixture(c, seed);
    } else if (kind == "gbm") {
      GbmConfig c;
      c.n = n;
      c.k = k;
      c.separation = s.get_double("data.separation", 4);
      c.radius = s.get_double("data.radius", c.radius);
      for (std::size_t i = 0; i < count; ++i) graphs.push_back(sample_gbm(c, derive_seed(seed, i)));
    } else {
      throw ConfigError("gen: unknown kind '" + kind + "' (sbm, mixture, gbm)");
    }
    for (auto& x : graphs) records.push_back({std::move(x), split});
  }
  write_dataset(out, records);
  std::cout << "wrote " << records.size() << " graphs to " << out << "\n";
  return 0;
}

int cmd_train(const Globals& g, const std::string& data, std::string out, const std::string& curve) {
  const Settings s = load_settings(g);
  const auto records = read_dataset(data);
  const auto train_set = split_of(records, "train");
  const auto val_set = split_of(records, "val");
  const auto spec = spec_from(s, s.get_int("data.k", classes_of(train_set)));
  TrainConfig tc;
  tc.epochs = s.get_int("train.epochs", tc.epochs);
  tc.lr = s.get_double("train.lr", tc.lr);
  tc.seed = g.seed;
  tc.loss = s.get("train.loss", "exact") == "cheap" ? LossKind::cheap : LossKind::exact;
  tc.subgroup = s.get_int("train.subgroup", 0);
  tc.max_steps = s.get_size("train.max_steps", 0);
  tc.eval_every = s.get_size("train.eval_every", 0);
  if (out.empty()) out = s.get("train.checkpoint", "model.ckpt");
  tc.checkpoint_path = out;
  tc.on_eval = [](int epoch, std::size_t step, double loss, double val) {
    std::cerr << "epoch " << epoch << " step " << step << " loss " << loss << " val overlap " << val << "\n";
  };
  const auto run = train(train_set, val_set, spec, tc);
  if (val_set.empty()) save_model(out, spec, run.best_params);
  if (!curve.empty()) {
    CsvTable t;
    t.header = {"epoch", "step", "train_loss", "val_overlap"};
    for (const auto& p : run.curve)
      t.rows.push_back({std::to_string(p.epoch), std::to_string(p.step), format_real(p.train_loss),
                        format_real(p.val_overlap)});
    write_csv(curve, t);
  }
  std::cout << "saved " << out << " (best validation overlap " << run.best_val_overlap << ")\n";
  return 0;
}

std::vector<Detector> detectors_from(const Settings& s, const std::vector<std::string>& fallback) {
  std::vector<Detector> out;
  for (const auto& d : s.get_list("sweep.detectors", fallback)) out.push_back(parse_detector(d));
  return out;
}

int cmd_eval(const Globals& g, const std::string& data, const std::string& model, const std::string& split) {
  const Settings s = load_settings(g);
  const auto graphs = split_of(read_dataset(data), split);
  if (graphs.empty()) throw ConfigError("eval: no graphs in split '" + split + "'");
  const int k = s.get_int("data.k", classes_of(graphs));
  LoadedModel loaded;
  DetectorContext ctx;
  ctx.seed = g.seed;
  ctx.pm_layers = s.get_size("sweep.pm_layers", 20);
  if (!model.empty()) {
    loaded = load_model(model);
    ctx.gnn_params = &loaded.params;
    ctx.gnn_spec = &loaded.spec;
  }
  CsvTable t;
  t.header = {"detector", "graphs", "overlap_mean", "overlap_std", "accuracy_mean", "accuracy_std"};
  for (Detector d : detectors_from(s, model.empty() ? std::vector<std::string>{"bh_assoc"}
                                                     : std::vector<std::string>{"gnn", "bh_assoc"})) {
    const auto sc = score_detector(d, graphs, k, ctx);
    t.rows.push_back({to_string(d), std::to_string(sc.graphs), format_real(sc.overlap_mean),
                      format_real(sc.overlap_std), format_real(sc.accuracy_mean), format_real(sc.accuracy_std)});
  }
  write_csv(std::cout, t);
  return 0;
}

int cmd_sweep(const Globals& g) {
  const Settings s = load_settings(g);
  SweepSpec sp;
  sp.detectors = detectors_from(s, {"bh_assoc"});
  sp.snr_grid = linear_grid(s.get_double("sweep.snr_min", 0.5), s.get_double("sweep.snr_max", 4),
                            s.get_size("sweep.points", 10));
  sp.graphs_per_point = s.get_size("sweep.graphs", 20);
  sp.n = s.get_size("data.n", 1000);
  sp.k = s.get_int("data.k", 2);
  sp.dbar = s.get_double("data.dbar", 4);
  sp.associative = s.get_bool("data.associative", true);
  sp.seed = g.seed;
  DetectorContext ctx;
  ctx.seed = derive_seed(g.seed, 1);
  ctx.pm_layers = s.get_size("sweep.pm_layers", 20);
  LoadedModel loaded;
  if (s.has("sweep.model")) {
    loaded = load_model(s.get("sweep.model", ""));
    ctx.gnn_params = &loaded.params;
    ctx.gnn_spec = &loaded.spec;
  }
  const auto t = sweep(sp, ctx);
  const std::string out = s.get("sweep.output", "");
  if (out.empty())
    write_csv(std::cout, t);
  else
    write_csv(out, t);
  return 0;
}

int cmd_experiment(const Globals& g, const std::string& name, bool full, const std::string& out,
                   const std::vector<std::string>& parts) {
  ExperimentOptions opts;
  opts.full = full;
  opts.seed = g.seed;
  opts.out_dir = out;
  opts.settings = load_settings(g);
  opts.log = &std::cerr;
  opts.parts = parts;
  const auto report = run_experiment(name, opts);
  std::cout << report.summary;
  if (out.empty()) write_csv(std::cout, report.table);
  return 0;
}

int cmd_snap_build(const Globals& g, const std::string& edges, const std::string& comms, const std::string& out) {
  SnapCaps caps;
  caps.seed = g.seed;
  const auto ds = snap_build(edges, comms, caps);
  for (const auto& w : ds.warnings) std::cerr << "warning: " << w << "\n";
  std::vector<DatasetRecord> records;
  for (const auto& x : ds.train) records.push_back({x.sample, "train"});
  for (const auto& x : ds.test) records.push_back({x.sample, "test"});
  write_dataset(out, records);
  std::cout << "wrote " << ds.train.size() << " train and " << ds.test.size() << " test subgraphs to " << out
            << " (" << ds.communities_kept << " communities kept, " << ds.communities_oversized << " oversized, "
            << ds.pairs_dropped_by_split << " pairs dropped by the split)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Community detection with graph neural networks, spectral methods and belief propagation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "base seed for all randomness");
  app.add_option("--config", g.config, "INI file with [model], [data], [train] and [sweep] sections")
      ->check(CLI::ExistingFile);
  for (const auto& [key, help] : Settings::known_keys())
    app.add_option_function<std::string>(
        "--" + key, [&g, key = key](const std::string& v) { g.overrides[key] = v; }, help);

  std::string kind = "sbm", out, data, model, curve, split = "test", name, edges, comms;
  bool full = false;
  std::vector<std::string> parts;

  auto* gen = app.add_subcommand("gen", "sample a dataset to disk (train, val and test splits)");
  gen->add_option("kind", kind, "sbm, mixture or gbm")->required();
  gen->add_option("--out", out, "output directory")->required();

  auto* tr = app.add_subcommand("train", "train a model on a dataset directory");
  tr->add_option("--data", data, "dataset directory")->required();
  tr->add_option("--out", out, "checkpoint path (default train.checkpoint or model.ckpt)");
  tr->add_option("--curve", curve, "CSV of the validation curve");

  auto* ev = app.add_subcommand("eval", "score detectors on a dataset split");
  ev->add_option("--data", data, "dataset directory")->required();
  ev->add_option("--model", model, "trained model for the gnn detector");
  ev->add_option("--split", split, "train, val or test");

  auto* sw = app.add_subcommand("sweep", "overlap against SNR on fresh SBM graphs");

  auto* ex = app.add_subcommand("experiment", "run a named experiment and compare with reference numbers");
  ex->add_option("name", name, "sbm_k2, sbm_disassoc, comp_stat_k5, gbm or snap")
      ->required()
      ->check(CLI::IsMember(experiment_names()));
  ex->add_flag("--full", full, "full scale instead of desk scale");
  ex->add_option("--out", out, "directory for CSV, summary and checkpoints");
  ex->add_option("--part", parts, "run only these parts");

  auto* sb = app.add_subcommand("snap-build", "extract community-pair subgraphs from SNAP files");
  sb->add_option("--edges", edges, "edge list, plain or gzip")->required()->check(CLI::ExistingFile);
  sb->add_option("--communities", comms, "community file, plain or gzip")->required()->check(CLI::ExistingFile);
  sb->add_option("--out", out, "output dataset directory")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_gen(g, kind, out);
    if (*tr) return cmd_train(g, data, out, curve);
    if (*ev) return cmd_eval(g, data, model, split);
    if (*sw) return cmd_sweep(g);
    if (*ex) return cmd_experiment(g, name, full, out, parts);
    if (*sb) return cmd_snap_build(g, edges, comms, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

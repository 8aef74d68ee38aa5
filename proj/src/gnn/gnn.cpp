#include "cdgnn/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "cdgnn/rng.hpp"
#include "json.hpp"

namespace cdgnn {

using nn::Tape;
using nn::Var;

void GnnModelSpec::validate() const {
  if (depth < 1) throw ConfigError("model: depth must be >= 1");
  if (width < 2 || width % 2 != 0) throw ConfigError("model: width must be even and >= 2");
  if (J < 1) throw ConfigError("model: J must be >= 1");
  if (classes < 2) throw ConfigError("model: classes must be >= 2");
  if (variant == GnnVariant::line_graph && line_J < 1) throw ConfigError("model: line_J must be >= 1");
}

GnnVariant parse_gnn_variant(const std::string& s) {
  if (s == "node_only" || s == "node") return GnnVariant::node_only;
  if (s == "line_graph" || s == "line") return GnnVariant::line_graph;
  throw ConfigError("unknown model variant '" + s + "' (node_only, line_graph)");
}

std::string to_string(GnnVariant v) { return v == GnnVariant::node_only ? "node_only" : "line_graph"; }

EdgeInput parse_edge_input(const std::string& s) {
  if (s == "line_degree") return EdgeInput::line_degree;
  if (s == "ones") return EdgeInput::ones;
  if (s == "incidence_degree") return EdgeInput::incidence_degree;
  throw ConfigError("unknown edge input '" + s + "' (line_degree, ones, incidence_degree)");
}

std::string to_string(EdgeInput e) {
  switch (e) {
    case EdgeInput::line_degree: return "line_degree";
    case EdgeInput::ones: return "ones";
    case EdgeInput::incidence_degree: return "incidence_degree";
  }
  return "?";
}

std::string spec_to_json(const GnnModelSpec& s) {
  nlohmann::json j = {{"format", "cdgnn-model"},
                      {"depth", s.depth},
                      {"width", s.width},
                      {"J", s.J},
                      {"classes", s.classes},
                      {"variant", to_string(s.variant)},
                      {"line_J", s.line_J},
                      {"scalar_coupling", s.scalar_coupling},
                      {"edge_input", to_string(s.edge_input)},
                      {"batch_norm", s.batch_norm},
                      {"bn_affine", s.bn_affine}};
  return j.dump();
}

GnnModelSpec spec_from_json(const std::string& text) {
  GnnModelSpec s;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (j.value("format", "") != "cdgnn-model") throw ConfigError("model header: not a cdgnn model");
    s.depth = j.at("depth");
    s.width = j.at("width");
    s.J = j.at("J");
    s.classes = j.at("classes");
    s.variant = parse_gnn_variant(j.at("variant"));
    s.line_J = j.at("line_J");
    s.scalar_coupling = j.at("scalar_coupling");
    s.edge_input = parse_edge_input(j.at("edge_input"));
    s.batch_norm = j.at("batch_norm");
    s.bn_affine = j.at("bn_affine");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model header: ") + e.what());
  }
  s.validate();
  return s;
}

namespace {

std::string pname(int layer, const char* what) { return "layer" + std::to_string(layer) + "." + what; }

// The last edge update would feed nothing, so the edge tower stops one
// layer short.
bool has_edge_tower(const GnnModelSpec& s, int layer) {
  return s.variant == GnnVariant::line_graph && layer + 1 < s.depth;
}

struct Shape {
  std::string name;
  std::size_t rows, cols;
  double stddev;  // 0: constant fill
  double fill;
};

std::vector<Shape> param_shapes(const GnnModelSpec& s) {
  s.validate();
  std::vector<Shape> out;
  const auto w = static_cast<std::size_t>(s.width);
  const std::size_t gens = s.generators();
  const auto lgens = static_cast<std::size_t>(s.line_J) + 3;
  for (int k = 0; k < s.depth; ++k) {
    const std::size_t d_in = k == 0 ? 1 : w;
    const double sd = 1.0 / std::sqrt(static_cast<double>(d_in * gens));
    out.push_back({pname(k, "theta"), w, gens * d_in, sd, 0});
    const std::size_t dr = s.scalar_coupling ? 1 : w;
    const std::size_t dc = s.scalar_coupling ? 1 : d_in;
    if (s.variant == GnnVariant::line_graph) out.push_back({pname(k, "delta"), dr, dc, sd, 0});
    if (has_edge_tower(s, k)) {
      const double lsd = 1.0 / std::sqrt(static_cast<double>(d_in * lgens));
      out.push_back({pname(k, "gamma"), w, lgens * d_in, lsd, 0});
      out.push_back({pname(k, "delta_edge"), dr, dc, lsd, 0});
    }
    if (s.batch_norm && s.bn_affine) {
      out.push_back({pname(k, "bn_scale"), 1, w, 0, 1});
      out.push_back({pname(k, "bn_shift"), 1, w, 0, 0});
      if (has_edge_tower(s, k)) {
        out.push_back({pname(k, "bn_edge_scale"), 1, w, 0, 1});
        out.push_back({pname(k, "bn_edge_shift"), 1, w, 0, 0});
      }
    }
  }
  out.push_back({"readout", static_cast<std::size_t>(s.classes), w, 1.0 / std::sqrt(static_cast<double>(w)), 0});
  return out;
}

}  // namespace

template <class T>
nn::ParamStore<T> init_params(const GnnModelSpec& spec, std::uint64_t seed) {
  nn::ParamStore<T> ps;
  Rng rng = make_rng(seed, 0x9a);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const Shape& sh : param_shapes(spec)) {
    Matrix<T>& m = ps.add(sh.name, sh.rows, sh.cols);
    for (T& v : m.values()) v = static_cast<T>(sh.stddev > 0 ? sh.stddev * normal(rng) : sh.fill);
  }
  return ps;
}

GraphInputs prepare_inputs(const SparseGraph& g, const GnnModelSpec& spec) {
  spec.validate();
  GraphInputs in;
  in.graph = &g;
  for (int j = 0; j < spec.J; ++j) in.powers.push_back(power_graph(g, j));
  in.degree = degree_vector(g);
  if (spec.variant == GnnVariant::line_graph) {
    LineGraph lg = line_graph(g);
    in.line = std::move(lg.graph);
    in.incidence = std::move(lg.incidence);
    for (int j = 0; j < spec.line_J; ++j)
      in.line_powers.push_back(power_graph(in.line, j));
    switch (spec.edge_input) {
      case EdgeInput::line_degree: in.edge_signal = degree_vector(in.line); break;
      case EdgeInput::ones: in.edge_signal = FeatureMatrix(in.line.num_nodes(), 1, 1.0); break;
      case EdgeInput::incidence_degree: in.edge_signal = in.incidence.apply_transpose(in.degree); break;
    }
  }
  return in;
}

namespace {

using Getter = std::function<Var(const std::string&)>;

bool is_set(Var v) { return v.id != Var{}.id; }

// One layer on a graph and its power supports: the generator stack plus an
// optional coupling input, a single mixing matrix, the half-ReLU split and BN.
template <class T>
Var layer(Tape<T>& t, const GnnModelSpec& s, const SparseGraph& g, const std::vector<SparseGraph>& powers, Var x,
          Var theta, Var coupling_input, Var coupling_weight, const std::string& bn_scale,
          const std::string& bn_shift, const Getter& get) {
  std::vector<Var> gens{x, t.degree(g, x), t.broadcast(x)};
  for (const SparseGraph& p : powers) gens.push_back(t.adjacency(p, x));
  Var w = theta;
  if (is_set(coupling_input)) {
    gens.push_back(coupling_input);
    Var cw = coupling_weight;
    if (s.scalar_coupling) {
      // scalar times identity, or times a ones column on the first layer
      const std::size_t d_in = t.value(x).cols();
      const std::size_t d_out = t.value(theta).rows();
      Matrix<T> e(d_out, d_in);
      for (std::size_t r = 0; r < d_out; ++r)
        for (std::size_t c = 0; c < d_in; ++c) e(r, c) = (d_in == 1 || r == c) ? T(1) : T(0);
      cw = t.scale_by(t.constant(std::move(e)), coupling_weight);
    }
    const Var ws[2] = {theta, cw};
    w = t.concat_cols(ws);
  }
  const Var z = t.linear(t.concat_cols(gens), w);
  const std::size_t d = t.value(z).cols();
  const Var halves[2] = {t.relu(t.slice_cols(z, 0, d / 2)), t.slice_cols(z, d / 2, d)};
  Var out = t.concat_cols(halves);
  if (s.batch_norm) {
    out = t.batch_norm(out);
    if (s.bn_affine) out = t.add_row(t.mul_cols(out, get(bn_scale)), get(bn_shift));
  }
  return out;
}

template <class T>
GnnOutput<T> forward_impl(Tape<T>& t, const GnnModelSpec& s, const GraphInputs& in, const Getter& get) {
  s.validate();
  if (!in.graph) throw GraphError("gnn: inputs not prepared");
  const SparseGraph& g = *in.graph;
  if (g.num_nodes() < 2 && s.batch_norm) throw GraphError("gnn: graph needs at least 2 nodes");
  if (static_cast<int>(in.powers.size()) != s.J) throw GraphError("gnn: inputs prepared for another J");
  const bool line = s.variant == GnnVariant::line_graph;
  if (line && (in.incidence.num_nodes() != g.num_nodes() || in.incidence.num_edges() != g.num_edges() ||
               static_cast<int>(in.line_powers.size()) != s.line_J))
    throw GraphError("gnn: line-graph inputs do not match the graph or spec");

  Var x = t.constant(in.degree.template cast<T>());
  Var y = line ? t.constant(in.edge_signal.template cast<T>()) : Var{};
  for (int k = 0; k < s.depth; ++k) {
    const Var cx = line ? t.incidence(in.incidence, y) : Var{};
    const Var nx = layer<T>(t, s, g, in.powers, x, get(pname(k, "theta")), cx,
                            line ? get(pname(k, "delta")) : Var{}, pname(k, "bn_scale"), pname(k, "bn_shift"), get);
    if (has_edge_tower(s, k))
      y = layer<T>(t, s, in.line, in.line_powers, y, get(pname(k, "gamma")), t.incidence_transpose(in.incidence, x),
                   get(pname(k, "delta_edge")), pname(k, "bn_edge_scale"), pname(k, "bn_edge_shift"), get);
    x = nx;
  }
  const Var logits = t.linear(x, get("readout"));
  return {logits, t.log_softmax_rows(logits)};
}

}  // namespace

template <class T>
GnnOutput<T> gnn_forward(Tape<T>& tape, nn::ParamStore<T>& params, const GnnModelSpec& spec, const GraphInputs& in) {
  return forward_impl<T>(tape, spec, in, [&](const std::string& n) { return params.bind(tape, n); });
}

template <class T>
Matrix<T> gnn_probabilities(const nn::ParamStore<T>& params, const GnnModelSpec& spec, const GraphInputs& in) {
  Tape<T> tape;
  const auto out =
      forward_impl<T>(tape, spec, in, [&](const std::string& n) { return tape.constant(params.value(n)); });
  Matrix<T> p = tape.value(out.log_probs);
  for (T& v : p.values()) v = std::exp(v);
  return p;
}

namespace {

template <class T>
void check_loss_inputs(const Matrix<T>& lp, const Labeling& truth, int classes) {
  if (lp.cols() != static_cast<std::size_t>(classes)) throw ShapeError("loss: log_probs must have C columns");
  if (truth.size() != lp.rows()) throw ShapeError("loss: label count does not match rows");
  for (auto y : truth)
    if (y < 0 || y >= classes) throw ConfigError("loss: label out of range");
}

// H(o; c) per true class from log-probabilities.
template <class T>
std::vector<double> class_entropies(const Matrix<T>& lp, const Labeling& truth, int classes) {
  std::vector<double> h(static_cast<std::size_t>(classes), 0.0);
  for (std::size_t i = 0; i < lp.rows(); ++i) {
    const auto c = static_cast<std::size_t>(truth[i]);
    const double l = static_cast<double>(lp(i, c));
    h[c] -= std::exp(l) * l;
  }
  return h;
}

// Shared by both losses: the selected classes are matched by permutation in
// the nll term, the others pay their entropy.
template <class T>
Var subgroup_loss(Tape<T>& t, Var log_probs, const Labeling& truth, int classes, std::vector<int> selected) {
  const Matrix<T>& lp = t.value(log_probs);
  const auto C = static_cast<std::size_t>(classes);

  const std::vector<double> entropy = class_entropies(lp, truth, classes);
  std::vector<bool> chosen(C, false);
  for (int c : selected) chosen[static_cast<std::size_t>(c)] = true;

  // Each candidate is summed in node order, so relabeling the truth
  // reproduces the minimum bit for bit.
  std::sort(selected.begin(), selected.end());
  std::vector<int> sigma = selected, best = selected, map(C, -1);
  double best_cost = selected.empty() ? 0.0 : INFINITY;
  if (!selected.empty()) do {
      for (std::size_t a = 0; a < selected.size(); ++a) map[static_cast<std::size_t>(selected[a])] = sigma[a];
      double v = 0;
      for (std::size_t i = 0; i < lp.rows(); ++i) {
        const auto c = static_cast<std::size_t>(truth[i]);
        if (chosen[c]) v -= static_cast<double>(lp(i, static_cast<std::size_t>(map[c])));
      }
      if (v < best_cost) {
        best_cost = v;
        best = sigma;
      }
    } while (std::next_permutation(sigma.begin(), sigma.end()));

  std::vector<int> target(C, -1);  // -1 marks an entropy class
  for (std::size_t a = 0; a < selected.size(); ++a) target[static_cast<std::size_t>(selected[a])] = best[a];
  double total = best_cost;
  for (std::size_t c = 0; c < C; ++c)
    if (target[c] < 0) total += entropy[c];

  return t.record(Matrix<T>(1, 1, static_cast<T>(total)), {log_probs},
                  [log_probs, truth, target](Tape<T>& tp, const Matrix<T>&, const Matrix<T>& g) {
                    const Matrix<T>& lp = tp.value(log_probs);
                    Matrix<T> d(lp.rows(), lp.cols());
                    const T s = g(0, 0);
                    for (std::size_t i = 0; i < lp.rows(); ++i) {
                      const auto c = static_cast<std::size_t>(truth[i]);
                      if (target[c] >= 0) {
                        d(i, static_cast<std::size_t>(target[c])) = -s;
                      } else {
                        const T l = lp(i, c);  // d/dl of -e^l l
                        d(i, c) = -s * std::exp(l) * (l + T(1));
                      }
                    }
                    tp.accumulate(log_probs, d);
                  });
}

}  // namespace

template <class T>
Var perm_invariant_loss(Tape<T>& tape, Var log_probs, const Labeling& truth, int classes) {
  if (classes > 6)
    throw ConfigError("loss: the exact loss enumerates C! permutations; use cheap_perm_loss for C > 6");
  check_loss_inputs(tape.value(log_probs), truth, classes);
  std::vector<int> all(static_cast<std::size_t>(std::max(classes, 0)));
  std::iota(all.begin(), all.end(), 0);
  return subgroup_loss(tape, log_probs, truth, classes, all);
}

template <class T>
Var cheap_perm_loss(Tape<T>& tape, Var log_probs, const Labeling& truth, int classes, int subgroup) {
  if (subgroup < 0 || subgroup > classes) throw ConfigError("loss: subgroup must lie in [0, C]");
  if (subgroup > 6) throw ConfigError("loss: subgroups larger than 6 are not enumerable");
  check_loss_inputs(tape.value(log_probs), truth, classes);
  const std::vector<double> h = class_entropies(tape.value(log_probs), truth, classes);
  std::vector<int> order(static_cast<std::size_t>(classes));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return h[a] > h[b]; });
  order.resize(static_cast<std::size_t>(subgroup));
  return subgroup_loss(tape, log_probs, truth, classes, order);
}

template <class T>
Labeling predict(const Matrix<T>& probs) {
  Labeling out(probs.rows(), 0);
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.cols(); ++c)
      if (probs(i, c) > probs(i, best)) best = c;
    out[i] = static_cast<std::int32_t>(best);
  }
  return out;
}

void save_model(const std::string& path, const GnnModelSpec& spec, const nn::ParamStore<float>& params) {
  nn::Checkpoint ckp;
  ckp.header = spec_to_json(spec);
  ckp.params = params;
  nn::save_checkpoint(path, ckp);
}

LoadedModel load_model(const std::string& path) {
  nn::Checkpoint ckp = nn::load_checkpoint(path);
  LoadedModel out{spec_from_json(ckp.header), std::move(ckp.params)};
  const auto shapes = param_shapes(out.spec);
  if (shapes.size() != out.params.entries().size())
    throw ConfigError("model " + path + ": array count does not match the header architecture");
  for (const Shape& sh : shapes) {
    if (!out.params.contains(sh.name)) throw ConfigError("model " + path + ": missing array " + sh.name);
    const auto& m = out.params.value(sh.name);
    if (m.rows() != sh.rows || m.cols() != sh.cols)
      throw ConfigError("model " + path + ": array " + sh.name + " has the wrong shape");
  }
  return out;
}

#define CDGNN_INSTANTIATE(T)                                                                                   \
  template nn::ParamStore<T> init_params<T>(const GnnModelSpec&, std::uint64_t);                               \
  template GnnOutput<T> gnn_forward<T>(Tape<T>&, nn::ParamStore<T>&, const GnnModelSpec&, const GraphInputs&); \
  template Matrix<T> gnn_probabilities<T>(const nn::ParamStore<T>&, const GnnModelSpec&, const GraphInputs&);  \
  template Var perm_invariant_loss<T>(Tape<T>&, Var, const Labeling&, int);                                    \
  template Var cheap_perm_loss<T>(Tape<T>&, Var, const Labeling&, int, int);                                   \
  template Labeling predict<T>(const Matrix<T>&);
CDGNN_INSTANTIATE(float)
CDGNN_INSTANTIATE(double)
#undef CDGNN_INSTANTIATE

}  // namespace cdgnn

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "cdgnn/gnn.hpp"
#include "doctest.h"
#include "support/finite_diff.hpp"
#include "support/oracles.hpp"

using namespace cdgnn;
using nn::Tape;
using nn::Var;
using Mat = Matrix<double>;

namespace {

GnnModelSpec small_spec(GnnVariant v = GnnVariant::node_only) {
  GnnModelSpec s;
  s.depth = 3;
  s.width = 4;
  s.J = 2;
  s.line_J = 2;
  s.classes = 3;
  s.variant = v;
  return s;
}

SparseGraph random_graph(std::size_t n, double p, std::uint64_t seed) {
  return SparseGraph::from_edges(n, oracle::random_edges(n, p, seed));
}

Mat log_of(const Mat& probs) {
  Mat l = probs;
  for (double& v : l.values()) v = std::log(v);
  return l;
}

double loss_value(const Mat& log_probs, const Labeling& y, int C) {
  Tape<double> t;
  return t.value(perm_invariant_loss(t, t.constant(log_probs), y, C))(0, 0);
}

Mat row_softmax(Mat m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double z = 0;
    for (double v : m.row(r)) z += std::exp(v);
    for (double& v : m.row(r)) v = std::exp(v) / z;
  }
  return m;
}

}  // namespace

TEST_CASE("spec validation and parameter layout") {
  GnnModelSpec s;
  CHECK_NOTHROW(s.validate());
  s.width = 5;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = GnnModelSpec{};
  s.depth = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = GnnModelSpec{};
  s.classes = 1;
  CHECK_THROWS_AS(s.validate(), ConfigError);

  const GnnModelSpec d = GnnModelSpec{};
  const auto ps = init_params<double>(d, 1);
  // (J+3) d_in d_out per layer plus the readout
  const std::size_t expect = 6 * 1 * 10 + 29 * 6 * 10 * 10 + 2 * 10;
  CHECK(ps.parameter_count() == expect);
  CHECK(ps.value("layer0.theta").rows() == 10);
  CHECK(ps.value("layer0.theta").cols() == 6);
  CHECK(ps.value("layer5.theta").cols() == 60);

  // init variance 1 / (d_in (J+3))
  double ss = 0;
  std::size_t cnt = 0;
  for (int k = 1; k < 30; ++k)
    for (double v : ps.value("layer" + std::to_string(k) + ".theta").values()) {
      ss += v * v;
      ++cnt;
    }
  CHECK(ss / static_cast<double>(cnt) == doctest::Approx(1.0 / 60).epsilon(0.05));

  CHECK(spec_from_json(spec_to_json(small_spec(GnnVariant::line_graph))) == small_spec(GnnVariant::line_graph));
  CHECK_THROWS_AS(spec_from_json("{\"format\":\"other\"}"), ConfigError);
  CHECK_THROWS_AS(spec_from_json("not json"), ConfigError);
  CHECK(parse_gnn_variant("line") == GnnVariant::line_graph);
  CHECK_THROWS_AS(parse_edge_input("bogus"), ConfigError);
}

TEST_CASE("zero parameters give uniform class probabilities") {
  const SparseGraph g = random_graph(20, 0.2, 3);
  for (auto v : {GnnVariant::node_only, GnnVariant::line_graph}) {
    const GnnModelSpec s = small_spec(v);
    auto ps = init_params<double>(s, 1);
    for (auto& e : ps.entries()) e.value.fill(0.0);
    const GraphInputs in = prepare_inputs(g, s);
    const Mat p = gnn_probabilities(ps, s, in);
    for (double x : p.values()) CHECK(x == doctest::Approx(1.0 / 3).epsilon(1e-14));
  }
}

TEST_CASE("permutation equivariance") {
  const SparseGraph g = random_graph(40, 0.12, 5);
  std::vector<NodeId> perm(40);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(9));
  const SparseGraph h = g.relabeled(perm);
  for (auto v : {GnnVariant::node_only, GnnVariant::line_graph}) {
    const GnnModelSpec s = small_spec(v);
    const auto ps = init_params<double>(s, 17);
    const Mat pg = gnn_probabilities(ps, s, prepare_inputs(g, s));
    const Mat ph = gnn_probabilities(ps, s, prepare_inputs(h, s));
    double worst = 0;
    for (std::size_t i = 0; i < 40; ++i)
      for (std::size_t c = 0; c < 3; ++c) worst = std::max(worst, std::abs(pg(i, c) - ph(perm[i], c)));
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("single layer picking A on the path P4 matches hand computation") {
  const SparseGraph p4 = SparseGraph::from_edges(4, std::vector<std::pair<NodeId, NodeId>>{{0, 1}, {1, 2}, {2, 3}});
  GnnModelSpec s;
  s.depth = 1;
  s.width = 2;
  s.J = 1;
  s.classes = 2;
  auto ps = init_params<double>(s, 0);
  // generators I, D, U, A; both rows select A
  ps.value("layer0.theta") = Mat(2, 4, {0, 0, 0, 1, 0, 0, 0, 1});
  ps.value("readout") = Mat(2, 2, {1, 0, 0, 0});
  const Mat p = gnn_probabilities(ps, s, prepare_inputs(p4, s));
  // A deg = (2, 3, 3, 2); BN: mean 2.5, population variance 0.25
  const double ad[4] = {2, 3, 3, 2};
  for (std::size_t i = 0; i < 4; ++i) {
    const double z = (ad[i] - 2.5) / std::sqrt(0.25 + 1e-5);
    CHECK(p(i, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-z))).epsilon(1e-12));
  }
}

TEST_CASE("zero coupling decouples the towers") {
  const SparseGraph g = random_graph(30, 0.15, 8);
  const GnnModelSpec sl = small_spec(GnnVariant::line_graph);
  GnnModelSpec sn = sl;
  sn.variant = GnnVariant::node_only;
  auto pl = init_params<double>(sl, 4);
  auto pn = init_params<double>(sn, 99);
  for (auto& e : pn.entries()) e.value = pl.value(e.name);
  for (auto& e : pl.entries())
    if (e.name.find(".delta") != std::string::npos && e.name.find("delta_edge") == std::string::npos)
      e.value.fill(0.0);
  const Mat a = gnn_probabilities(pl, sl, prepare_inputs(g, sl));
  const Mat b = gnn_probabilities(pn, sn, prepare_inputs(g, sn));
  CHECK(max_abs_diff(a, b) <= 1e-12);

  // nonzero coupling does change the node tower
  auto pc = init_params<double>(sl, 4);
  CHECK(max_abs_diff(gnn_probabilities(pc, sl, prepare_inputs(g, sl)), b) > 1e-6);

  GnnModelSpec ss = sl;
  ss.scalar_coupling = true;
  const auto psc = init_params<double>(ss, 4);
  CHECK(psc.value("layer1.delta").size() == 1);
  CHECK_NOTHROW(gnn_probabilities(psc, ss, prepare_inputs(g, ss)));
}

TEST_CASE("every parameter receives a gradient") {
  const SparseGraph g = random_graph(16, 0.3, 2);
  Labeling y(16);
  for (std::size_t i = 0; i < 16; ++i) y[i] = static_cast<std::int32_t>(i % 3);
  for (auto v : {GnnVariant::node_only, GnnVariant::line_graph}) {
    GnnModelSpec s = small_spec(v);
    s.bn_affine = true;
    auto ps = init_params<double>(s, 6);
    const GraphInputs in = prepare_inputs(g, s);
    Tape<double> t;
    t.backward(perm_invariant_loss(t, gnn_forward(t, ps, s, in).log_probs, y, 3));
    for (const auto& e : ps.entries()) {
      double mass = 0;
      for (double x : e.grad.values()) mass += std::abs(x);
      CHECK_MESSAGE(mass > 0, e.name);
    }
  }
}

TEST_CASE("network gradient matches finite differences on 12 nodes") {
  const SparseGraph g = random_graph(12, 0.35, 4);
  Labeling y(12);
  for (std::size_t i = 0; i < 12; ++i) y[i] = static_cast<std::int32_t>((i * 7) % 3);
  for (auto v : {GnnVariant::node_only, GnnVariant::line_graph}) {
    const GnnModelSpec s = small_spec(v);
    auto ps = init_params<double>(s, 12);
    const GraphInputs in = prepare_inputs(g, s);
    auto loss = [&](bool cheap) {
      Tape<double> t;
      const Var lp = gnn_forward(t, ps, s, in).log_probs;
      const Var l = cheap ? cheap_perm_loss(t, lp, y, 3, 2) : perm_invariant_loss(t, lp, y, 3);
      t.backward(l);
      return t.value(l)(0, 0);
    };
    for (bool cheap : {false, true}) {
      ps.zero_grad();
      loss(cheap);
      std::vector<Mat> grads;
      for (const auto& e : ps.entries()) grads.push_back(e.grad);
      double worst = 0;
      const double h = 1e-5;
      for (std::size_t p = 0; p < ps.entries().size(); ++p) {
        Mat& w = ps.entries()[p].value;
        for (std::size_t e = 0; e < w.size(); ++e) {
          const double x0 = w.data()[e];
          w.data()[e] = x0 + h;
          const double up = loss(cheap);
          w.data()[e] = x0 - h;
          const double down = loss(cheap);
          w.data()[e] = x0;
          const double num = (up - down) / (2 * h);
          const double ana = grads[p].data()[e];
          worst = std::max(worst, std::abs(num - ana) / std::max({1.0, std::abs(num), std::abs(ana)}));
        }
      }
      CHECK(worst <= 1e-3);
    }
  }
}

TEST_CASE("permutation-invariant loss") {
  const Labeling y{0, 1, 2, 2, 1, 0, 0};
  const int C = 3;
  SUBCASE("one-hot predictions under a relabeling give zero") {
    Mat lp(7, 3, -1e3);
    const int sigma[3] = {2, 0, 1};
    for (std::size_t i = 0; i < 7; ++i) lp(i, sigma[y[i]]) = 0.0;
    CHECK(loss_value(lp, y, C) == 0.0);
  }
  SUBCASE("invariant under every relabeling of the truth") {
    const Mat lp = log_of(row_softmax(oracle::random_matrix(7, 3, 5, -2, 2)));
    const double base = loss_value(lp, y, C);
    std::vector<int> sigma{0, 1, 2};
    do {
      Labeling z = y;
      for (auto& v : z) v = sigma[v];
      CHECK(loss_value(lp, z, C) == base);
    } while (std::next_permutation(sigma.begin(), sigma.end()));
    // equals the explicit minimum over the 6 permutations
    double best = INFINITY;
    sigma = {0, 1, 2};
    do {
      double v = 0;
      for (std::size_t i = 0; i < 7; ++i) v -= lp(i, sigma[y[i]]);
      best = std::min(best, v);
    } while (std::next_permutation(sigma.begin(), sigma.end()));
    CHECK(base == doctest::Approx(best).epsilon(1e-14));
  }
  SUBCASE("uniform predictions cost n log C") {
    for (int c : {2, 3, 5}) {
      Labeling z(11);
      for (std::size_t i = 0; i < 11; ++i) z[i] = static_cast<std::int32_t>((i * 3) % c);
      CHECK(loss_value(Mat(11, c, -std::log(c)), z, c) == doctest::Approx(11 * std::log(c)).epsilon(1e-14));
    }
  }
  SUBCASE("argument checks") {
    Tape<double> t;
    CHECK_THROWS_AS(perm_invariant_loss(t, t.constant(Mat(2, 7)), Labeling{0, 1}, 7), ConfigError);
    CHECK_THROWS_AS(perm_invariant_loss(t, t.constant(Mat(2, 3)), Labeling{0, 1, 2}, 3), ShapeError);
    CHECK_THROWS_AS(perm_invariant_loss(t, t.constant(Mat(2, 3)), Labeling{0, 3}, 3), ConfigError);
    CHECK_THROWS_AS(cheap_perm_loss(t, t.constant(Mat(2, 3)), Labeling{0, 1}, 3, 4), ConfigError);
  }
}

TEST_CASE("cheap permutation loss") {
  // C = 3, subgroup 2. Entropies per true class:
  // H0 = -0.7 ln 0.7, H1 = -0.6 ln 0.6, H2 = -(0.8 ln 0.8 + 0.3 ln 0.3),
  // so classes 2 and 1 are permuted and class 0 pays H0.
  const Mat probs(4, 3, {0.7, 0.2, 0.1, 0.3, 0.6, 0.1, 0.1, 0.1, 0.8, 0.2, 0.5, 0.3});
  const Labeling y{0, 1, 2, 2};
  const Mat lp = log_of(probs);
  const double keep = -std::log(0.6) - std::log(0.8) - std::log(0.3);
  const double swap = -std::log(0.1) - std::log(0.1) - std::log(0.5);
  const double h0 = -0.7 * std::log(0.7);
  Tape<double> t;
  const Var x = t.constant(lp);
  CHECK(t.value(cheap_perm_loss(t, x, y, 3, 2))(0, 0) == doctest::Approx(std::min(keep, swap) + h0).epsilon(1e-12));

  const double full = t.value(perm_invariant_loss(t, x, y, 3))(0, 0);
  CHECK(t.value(cheap_perm_loss(t, x, y, 3, 3))(0, 0) == full);

  const double h1 = -0.6 * std::log(0.6);
  const double h2 = -(0.8 * std::log(0.8) + 0.3 * std::log(0.3));
  CHECK(t.value(cheap_perm_loss(t, x, y, 3, 0))(0, 0) == doctest::Approx(h0 + h1 + h2).epsilon(1e-12));

  // entropy gradient
  CHECK(oracle::gradient_error({lp}, [&](auto& tp, auto& v) { return cheap_perm_loss(tp, v[0], y, 3, 0); }) <= 1e-4);
}

TEST_CASE("predict") {
  const Mat onehot(3, 3, {0, 1, 0, 0, 0, 1, 1, 0, 0});
  CHECK(predict(onehot) == Labeling{1, 2, 0});
  CHECK(predict(Mat(5, 4, 0.25)) == Labeling(5, 0));
  const Mat r = oracle::random_matrix(50, 5, 3, 0, 1);
  const Labeling got = predict(r);
  for (std::size_t i = 0; i < 50; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 0; c < 5; ++c)
      if (r(i, c) > r(i, best)) best = c;
    CHECK(got[i] == static_cast<std::int32_t>(best));
  }
}

TEST_CASE("receptive field grows by 2^(J-1) hops per layer") {
  // On paths, without the two global operations (broadcast, batch norm),
  // features at v depend only on nodes within depth * 2^(J-1) hops.
  const std::size_t n = 40;
  std::vector<std::pair<NodeId, NodeId>> path;
  for (NodeId i = 0; i + 1 < static_cast<NodeId>(n); ++i) path.emplace_back(i, i + 1);
  auto changed = path;
  changed.emplace_back(20, 22);  // degrees change at 20 and 22
  const SparseGraph g1 = SparseGraph::from_edges(n, path), g2 = SparseGraph::from_edges(n, changed);
  GnnModelSpec s;
  s.depth = 3;
  s.width = 4;
  s.J = 2;
  s.classes = 2;
  s.batch_norm = false;
  auto ps = init_params<double>(s, 21);
  for (int k = 0; k < s.depth; ++k) {
    Mat& th = ps.value("layer" + std::to_string(k) + ".theta");
    const std::size_t d_in = th.cols() / s.generators();
    for (std::size_t r = 0; r < th.rows(); ++r)
      for (std::size_t c = 2 * d_in; c < 3 * d_in; ++c) th(r, c) = 0.0;  // U block
  }
  auto logits = [&](const SparseGraph& g) {
    Tape<double> t;
    const auto in = prepare_inputs(g, s);
    return t.value(gnn_forward(t, ps, s, in).logits);
  };
  const Mat a = logits(g1), b = logits(g2);
  const int reach = s.depth * (1 << (s.J - 1));  // 6
  for (std::size_t v = 0; v < n; ++v) {
    const int dist = std::min(std::abs(static_cast<int>(v) - 20), std::abs(static_cast<int>(v) - 22));
    bool same = true;
    for (std::size_t c = 0; c < 2; ++c) same = same && a(v, c) == b(v, c);
    if (dist > reach) CHECK_MESSAGE(same, "node " << v);
  }
  // the boundary of the receptive field is reached
  CHECK((a(20 - reach, 0) != b(20 - reach, 0) || a(20 - reach, 1) != b(20 - reach, 1)));
}

TEST_CASE("model checkpoint round trip and validation") {
  const GnnModelSpec s = small_spec(GnnVariant::line_graph);
  const auto ps = init_params<float>(s, 3);
  const auto path = (std::filesystem::temp_directory_path() / "cdgnn_test_model.bin").string();
  save_model(path, s, ps);
  const LoadedModel m = load_model(path);
  CHECK(m.spec == s);
  for (const auto& e : ps.entries()) CHECK(max_abs_diff(e.value, m.params.value(e.name)) == 0.0f);

  auto bad = ps;
  bad.value("readout") = Matrix<float>(2, 4);
  save_model(path, s, bad);
  CHECK_THROWS_AS(load_model(path), ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("line-graph inputs") {
  const SparseGraph g = random_graph(15, 0.3, 1);
  const GnnModelSpec s = small_spec(GnnVariant::line_graph);
  const GraphInputs in = prepare_inputs(g, s);
  CHECK(in.line.num_nodes() == g.num_edges());
  CHECK(in.line_powers.size() == 2);
  CHECK(in.edge_signal.rows() == g.num_edges());
  CHECK_THROWS_AS(prepare_inputs(SparseGraph::from_edges(3, std::vector<std::pair<NodeId, NodeId>>{}), s), GraphError);
  GnnModelSpec other = s;
  other.J = 3;
  Tape<double> t;
  auto ps = init_params<double>(other, 0);
  CHECK_THROWS_AS(gnn_forward(t, ps, other, in), GraphError);
}

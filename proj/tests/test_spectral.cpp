#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "cdgnn/overlap.hpp"
#include "cdgnn/rng.hpp"
#include "cdgnn/spectral.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace cdgnn;

namespace {

Eigen::MatrixXd dense_adjacency(const oracle::EdgePairs& edges, std::size_t n) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (auto [u, v] : edges) {
    a(u, v) = 1;
    a(v, u) = 1;
  }
  return a;
}

Eigen::MatrixXd dense_operator(OperatorKind kind, const Eigen::MatrixXd& a, double r = 0) {
  const Eigen::Index n = a.rows();
  const Eigen::VectorXd deg = a.rowwise().sum();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  switch (kind) {
    case OperatorKind::adjacency: return a;
    case OperatorKind::laplacian_unnormalized: return Eigen::MatrixXd(deg.asDiagonal()) - a;
    case OperatorKind::laplacian_symmetric: {
      Eigen::VectorXd s(n);
      for (Eigen::Index i = 0; i < n; ++i) s(i) = deg(i) > 0 ? 1 / std::sqrt(deg(i)) : 0;
      return id - s.asDiagonal() * a * s.asDiagonal();
    }
    case OperatorKind::bethe_hessian:
      return (r * r - 1) * id - r * a + Eigen::MatrixXd(deg.asDiagonal());
    default: break;
  }
  return {};
}

// Directed edges sorted by (source, target), built from the dense matrix.
Eigen::MatrixXd dense_nonbacktracking(const Eigen::MatrixXd& a) {
  std::vector<std::pair<int, int>> arcs;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (a(i, j) != 0) arcs.emplace_back(i, j);
  const auto m = static_cast<Eigen::Index>(arcs.size());
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index x = 0; x < m; ++x)
    for (Eigen::Index y = 0; y < m; ++y)
      if (arcs[x].second == arcs[y].first && arcs[x].first != arcs[y].second) b(x, y) = 1;
  return b;
}

FeatureMatrix from_eigen(const Eigen::MatrixXd& m) {
  FeatureMatrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

Eigen::MatrixXd to_eigen(const FeatureMatrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

double abs_cosine(std::span<const double> a, const Eigen::VectorXd& b) {
  double d = 0, na = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += a[i] * b(static_cast<Eigen::Index>(i));
    na += a[i] * a[i];
  }
  return std::abs(d) / std::sqrt(na) / b.norm();
}

SparseGraph graph_of(std::size_t n, const oracle::EdgePairs& e) { return build_graph(n, e); }

double mean_overlap(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

oracle::EdgePairs two_cliques(int size) {
  oracle::EdgePairs e;
  for (int base : {0, size})
    for (int i = 0; i < size; ++i)
      for (int j = i + 1; j < size; ++j) e.emplace_back(base + i, base + j);
  return e;
}

Labeling halves(int size) {
  Labeling t(2 * size, 0);
  std::fill(t.begin() + size, t.end(), 1);
  return t;
}

}  // namespace

TEST_CASE("operators match dense references on random graphs") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const std::size_t n = 5 + seed * 2;  // up to 27
    const auto edges = oracle::random_edges(n, 0.25, seed);
    if (edges.empty()) continue;
    const SparseGraph g = graph_of(n, edges);
    const Eigen::MatrixXd a = dense_adjacency(edges, n);
    const Eigen::MatrixXd x = to_eigen(from_eigen(Eigen::MatrixXd::Random(n, 3)));
    const FeatureMatrix fx = from_eigen(x);

    const double r = 0.3 + 0.2 * static_cast<double>(seed);
    const std::vector<std::pair<LinearOperatorSpec, Eigen::MatrixXd>> cases{
        {LinearOperatorSpec::adjacency(g), dense_operator(OperatorKind::adjacency, a)},
        {LinearOperatorSpec::laplacian(g), dense_operator(OperatorKind::laplacian_unnormalized, a)},
        {LinearOperatorSpec::laplacian_sym(g), dense_operator(OperatorKind::laplacian_symmetric, a)},
        {LinearOperatorSpec::bethe_hessian(g, r), dense_operator(OperatorKind::bethe_hessian, a, r)},
        {LinearOperatorSpec::bethe_hessian(g, -r), dense_operator(OperatorKind::bethe_hessian, a, -r)},
    };
    for (const auto& [op, dense] : cases) {
      const Eigen::MatrixXd got = to_eigen(apply_operator(op, fx));
      CHECK((got - dense * x).cwiseAbs().maxCoeff() <= 1e-10);
    }

    const Eigen::MatrixXd b = dense_nonbacktracking(a);
    const Eigen::MatrixXd y = Eigen::MatrixXd::Random(b.rows(), 2);
    const Eigen::MatrixXd got = to_eigen(apply_operator(LinearOperatorSpec::nonbacktracking(g), from_eigen(y)));
    CHECK((got - b * y).cwiseAbs().maxCoeff() <= 1e-10);

    // BH(1) is the unnormalized Laplacian.
    const auto bh1 = apply_operator(LinearOperatorSpec::bethe_hessian(g, 1.0), fx);
    const auto lap = apply_operator(LinearOperatorSpec::laplacian(g), fx);
    CHECK(max_abs_diff(bh1, lap) <= 1e-12);
    // with integer inputs every product is exact, so the match is bitwise
    FeatureMatrix ix(fx.rows(), 1);
    for (std::size_t i = 0; i < ix.rows(); ++i) ix(i, 0) = static_cast<double>(static_cast<int>(i % 7) - 3);
    const auto bi = apply_operator(LinearOperatorSpec::bethe_hessian(g, 1.0), ix);
    const auto li = apply_operator(LinearOperatorSpec::laplacian(g), ix);
    CHECK(std::equal(bi.values().begin(), bi.values().end(), li.values().begin()));
  }
  const SparseGraph g = graph_of(3, {{0, 1}});
  CHECK_THROWS_AS(apply_operator(LinearOperatorSpec::laplacian(g), FeatureMatrix(2, 1)), ShapeError);
}

TEST_CASE("Bethe Hessian examples") {
  const oracle::EdgePairs k3{{0, 1}, {1, 2}, {0, 2}};
  const SparseGraph g = graph_of(3, k3);
  const auto op = LinearOperatorSpec::bethe_hessian(g, 2.0);
  // 5I - 2A on K3
  const Eigen::MatrixXd dense = dense_operator(OperatorKind::bethe_hessian, dense_adjacency(k3, 3), 2.0);
  CHECK((dense - (5 * Eigen::MatrixXd::Identity(3, 3) - 2 * dense_adjacency(k3, 3))).norm() == 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
  CHECK(es.eigenvalues()(0) == doctest::Approx(1));
  CHECK(es.eigenvalues()(1) == doctest::Approx(7));
  CHECK(es.eigenvalues()(2) == doctest::Approx(7));

  const auto eig = smallest_eigenpairs(op, 3, {});
  REQUIRE(eig.all_converged());
  CHECK(eig.pairs[0].value == doctest::Approx(1).epsilon(1e-8));
  CHECK(eig.pairs[1].value == doctest::Approx(7).epsilon(1e-8));
  CHECK(eig.pairs[2].value == doctest::Approx(7).epsilon(1e-8));

  // BH(r) 1 on regular graphs: (r^2 - 1 + d - r d) 1
  for (auto [n, edges] : {std::pair{6, oracle::EdgePairs{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}}},
                          std::pair{4, oracle::EdgePairs{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}}}) {
    const SparseGraph reg = graph_of(n, edges);
    const double d = static_cast<double>(reg.degree(0));
    for (double r : {-1.5, 0.5, 1.7}) {
      const auto y = apply_operator(LinearOperatorSpec::bethe_hessian(reg, r), FeatureMatrix(n, 1, 1.0));
      for (int i = 0; i < n; ++i) CHECK(y(i, 0) == doctest::Approx(r * r - 1 + d - r * d));
    }
  }
}

TEST_CASE("power_fiedler against the dense eigensolver") {
  SUBCASE("P4 Laplacian") {
    const oracle::EdgePairs p4{{0, 1}, {1, 2}, {2, 3}};
    const SparseGraph g = graph_of(4, p4);
    const std::vector<double> ones(4, 0.5);
    const auto fied = power_fiedler(LinearOperatorSpec::laplacian(g), ones, {});
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        dense_operator(OperatorKind::laplacian_unnormalized, dense_adjacency(p4, 4)));
    CHECK(fied.converged);
    CHECK(fied.value == doctest::Approx(es.eigenvalues()(1)).epsilon(1e-8));
    CHECK(abs_cosine(fied.vector, es.eigenvectors().col(1)) >= 1 - 1e-6);
    CHECK(std::abs(std::inner_product(ones.begin(), ones.end(), fied.vector.begin(), 0.0)) <= 1e-8);
  }
  SUBCASE("two disjoint triangles") {
    const oracle::EdgePairs e{{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}};
    const SparseGraph g = graph_of(6, e);
    const std::vector<double> ones(6, 1.0);
    const auto fied = power_fiedler(LinearOperatorSpec::laplacian(g), ones, {});
    CHECK(fied.converged);
    CHECK(std::abs(fied.value) <= 1e-7);
    for (int i : {1, 2}) CHECK(fied.vector[i] == doctest::Approx(fied.vector[0]).epsilon(1e-6));
    for (int i : {4, 5}) CHECK(fied.vector[i] == doctest::Approx(fied.vector[3]).epsilon(1e-6));
    CHECK(fied.vector[0] * fied.vector[3] < 0);
  }
  SUBCASE("random graph, BH(sqrt dbar)") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const std::size_t n = 20 + seed % 11;
      const auto edges = oracle::random_edges(n, 0.25, 40 + seed);
      const SparseGraph g = graph_of(n, edges);
      const double r = std::sqrt(g.average_degree());
      const auto op = LinearOperatorSpec::bethe_hessian(g, r);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          dense_operator(OperatorKind::bethe_hessian, dense_adjacency(edges, n), r));
      const Eigen::VectorXd v0 = es.eigenvectors().col(0);
      const std::vector<double> bottom(v0.data(), v0.data() + v0.size());
      SpectralConfig cfg;
      cfg.seed = seed;
      const auto fied = power_fiedler(op, bottom, cfg);
      CHECK(fied.converged);
      CHECK(abs_cosine(fied.vector, es.eigenvectors().col(1)) >= 1 - 1e-6);
      CHECK(std::abs(std::inner_product(bottom.begin(), bottom.end(), fied.vector.begin(), 0.0)) <= 1e-8);

      const auto eig = smallest_eigenpairs(op, 3, cfg);
      for (int i = 0; i < 3; ++i) {
        CHECK(eig.pairs[i].value == doctest::Approx(es.eigenvalues()(i)).epsilon(1e-6));
        CHECK(abs_cosine(eig.pairs[i].vector, es.eigenvectors().col(i)) >= 1 - 1e-6);
      }
    }
  }
  SUBCASE("non-convergence is flagged") {
    const auto edges = oracle::random_edges(30, 0.2, 7);
    const SparseGraph g = graph_of(30, edges);
    SpectralConfig cfg;
    cfg.max_iter = 2;
    const auto fied = power_fiedler(LinearOperatorSpec::laplacian(g), std::vector<double>(30, 1.0), cfg);
    CHECK_FALSE(fied.converged);
    CHECK(fied.vector.size() == 30);
  }
}

TEST_CASE("smallest_eigenpairs properties") {
  SUBCASE("connected Laplacian: 0 with constant vector") {
    const auto edges = oracle::random_tree(25, 3);
    const SparseGraph g = graph_of(25, edges);
    const auto eig = smallest_eigenpairs(LinearOperatorSpec::laplacian(g), 2, {});
    CHECK(std::abs(eig.pairs[0].value) <= 1e-8);
    for (double x : eig.pairs[0].vector) CHECK(x == doctest::Approx(1 / std::sqrt(25.0)).epsilon(1e-6));
    CHECK(eig.pairs[1].value > 1e-3);
  }
  SUBCASE("multiplicity of 0 counts components") {
    // three components: a path, a triangle and an isolated node
    const oracle::EdgePairs e{{0, 1}, {1, 2}, {3, 4}, {4, 5}, {3, 5}};
    const SparseGraph g = graph_of(7, e);
    const auto op = LinearOperatorSpec::laplacian(g);
    const auto eig = smallest_eigenpairs(op, 4, {});
    REQUIRE(eig.all_converged());
    int zeros = 0;
    for (const auto& p : eig.pairs) zeros += std::abs(p.value) <= 1e-6;
    CHECK(zeros == 3);
    CHECK(eig.pairs[3].value > 0.5);
    for (const auto& p : eig.pairs) {
      const auto mv = apply_operator(op, FeatureMatrix(7, 1, p.vector));
      double res = 0;
      for (std::size_t i = 0; i < 7; ++i) res += std::pow(mv(i, 0) - p.value * p.vector[i], 2);
      CHECK(std::sqrt(res) <= 1e-8 * eig.norm_estimate * (1 + 1e-12));
    }
  }
  SUBCASE("BH(sqrt dbar) on a 2-community SBM has exactly 2 negative eigenvalues") {
    int exactly_two = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto s = sample_sbm({200, 2, 8.0, 1.0}, seed);
      const double r = std::sqrt(s.graph.average_degree());
      oracle::EdgePairs e;
      for (const Edge& x : s.graph.edges()) e.emplace_back(x.u, x.v);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          dense_operator(OperatorKind::bethe_hessian, dense_adjacency(e, 200), r), Eigen::EigenvaluesOnly);
      const auto negative = (es.eigenvalues().array() < 0).count();
      exactly_two += negative == 2;
      if (seed == 0) {
        const auto eig = smallest_eigenpairs(LinearOperatorSpec::bethe_hessian(s.graph, r), 3, {});
        for (int i = 0; i < 3; ++i) CHECK((eig.pairs[i].value < 0) == (es.eigenvalues()(i) < 0));
      }
    }
    CHECK(exactly_two > 10);
  }
}

TEST_CASE("kmeans") {
  SUBCASE("two separated clouds") {
    Rng rng = make_rng(5);
    std::normal_distribution<double> gauss(0, 0.1);
    FeatureMatrix x(40, 2);
    for (std::size_t i = 0; i < 40; ++i) {
      x(i, 0) = (i < 20 ? -5.0 : 5.0) + gauss(rng);
      x(i, 1) = gauss(rng);
    }
    const auto r = kmeans(x, 2);
    CHECK_FALSE(r.degenerate);
    for (std::size_t i = 1; i < 40; ++i) CHECK((r.labels[i] == r.labels[0]) == (i < 20));
    const auto again = kmeans(x, 2);
    CHECK(again.labels == r.labels);
    CHECK(again.inertia == r.inertia);
  }
  SUBCASE("identical points") {
    const auto r = kmeans(FeatureMatrix(10, 3, 1.5), 3);
    CHECK(r.degenerate);
    for (auto l : r.labels) CHECK(l == 0);
    CHECK(r.inertia == 0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(kmeans(FeatureMatrix(2, 1), 3), ConfigError);
    FeatureMatrix bad(3, 1);
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(kmeans(bad, 2), ConfigError);
  }
}

TEST_CASE("spectral_cluster on disjoint cliques") {
  const SparseGraph g = graph_of(20, two_cliques(10));
  const Labeling truth = halves(10);
  for (auto m : {SpectralMethod::laplacian_sym, SpectralMethod::bh_assoc}) {
    const auto r = spectral_cluster(g, 2, m);
    CHECK(overlap(truth, r.labels, 2).overlap == 1);
  }
  CHECK(overlap(truth, truncated_pm_baseline(g, 2, 50, 1).labels, 2).overlap == 1);
  CHECK(parse_spectral_method("bh_disassoc") == SpectralMethod::bh_disassoc);
  CHECK_THROWS_AS(parse_spectral_method("bogus"), ConfigError);
  CHECK_THROWS_AS(spectral_cluster(g, 1, SpectralMethod::bh_assoc), ConfigError);
}

TEST_CASE("spectral_cluster on SBM graphs") {
  std::vector<double> assoc, wrong_end, right_end;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = rates_for_snr(3, 4, 2);
    const auto s = sample_sbm({1000, 2, r.a, r.b}, 200 + seed);
    SpectralConfig cfg;
    cfg.seed = seed;
    assoc.push_back(overlap(s.truth, spectral_cluster(s.graph, 2, SpectralMethod::bh_assoc, cfg).labels, 2).overlap);

    const auto d = rates_for_snr(3, 4, 2, false);
    const auto t = sample_sbm({1000, 2, d.a, d.b}, 300 + seed);
    wrong_end.push_back(overlap(t.truth, spectral_cluster(t.graph, 2, SpectralMethod::bh_assoc, cfg).labels, 2).overlap);
    right_end.push_back(overlap(t.truth, spectral_cluster(t.graph, 2, SpectralMethod::bh_disassoc, cfg).labels, 2).overlap);
  }
  MESSAGE("assoc " << mean_overlap(assoc) << " wrong end " << mean_overlap(wrong_end) << " right end "
                   << mean_overlap(right_end));
  CHECK(mean_overlap(assoc) >= 0.6);
  CHECK(mean_overlap(wrong_end) <= 0.1);
  CHECK(mean_overlap(right_end) >= 0.6);
}

TEST_CASE("spectral_cluster is invariant under node relabeling") {
  const auto s = sample_sbm({300, 2, 20.0, 1.0}, 9);
  std::vector<NodeId> perm(300);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = make_rng(3);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto base = spectral_cluster(s.graph, 2, SpectralMethod::bh_assoc).labels;
  const auto moved = spectral_cluster(s.graph.relabeled(perm), 2, SpectralMethod::bh_assoc).labels;
  Labeling back(300);
  for (std::size_t i = 0; i < 300; ++i) back[i] = moved[perm[i]];
  CHECK(overlap(base, back, 2).overlap == 1);
}

TEST_CASE("truncated power method baseline") {
  SUBCASE("many layers recover spectral clustering") {
    double agree = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto s = sample_sbm({100, 2, 14.0, 2.0}, 40 + seed);
      const auto pm = truncated_pm_baseline(s.graph, 2, 500, seed).labels;
      const auto sc = spectral_cluster(s.graph, 2, SpectralMethod::bh_assoc).labels;
      agree += overlap(sc, pm, 2).overlap / 5;
    }
    CHECK(agree >= 0.99);
  }
  SUBCASE("one layer near threshold is at chance") {
    std::vector<double> ov;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto r = rates_for_snr(1.1, 4, 2);
      const auto s = sample_sbm({1000, 2, r.a, r.b}, 60 + seed);
      ov.push_back(overlap(s.truth, truncated_pm_baseline(s.graph, 2, 1, seed).labels, 2).overlap);
    }
    CHECK(std::abs(mean_overlap(ov)) <= 0.1);
  }
}

TEST_CASE("non-backtracking matrix") {
  SUBCASE("C4 is a permutation") {
    const SparseGraph c4 = graph_of(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
    const auto b = nonbacktracking_matrix(c4);
    CHECK(b.dim() == 8);
    for (std::size_t p = 0; p < 8; ++p) {
      std::vector<double> e(8, 0.0), y(8);
      e[p] = 1;
      b.apply(e, y);
      CHECK(std::accumulate(y.begin(), y.end(), 0.0) == 1);  // column sums
    }
    CHECK(b.spectral_radius() == doctest::Approx(1).epsilon(1e-9));
  }
  SUBCASE("regular graphs: rho = d - 1") {
    const oracle::EdgePairs k4{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    CHECK(nonbacktracking_matrix(graph_of(4, k4)).spectral_radius() == doctest::Approx(2).epsilon(1e-6));
    // Petersen graph, 3-regular; dense check of the spectrum too
    const oracle::EdgePairs pet{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}, {0, 5}, {1, 6}, {2, 7},
                                {3, 8}, {4, 9}, {5, 7}, {7, 9}, {6, 9}, {6, 8}, {5, 8}};
    const SparseGraph g = graph_of(10, pet);
    Eigen::EigenSolver<Eigen::MatrixXd> es(dense_nonbacktracking(dense_adjacency(pet, 10)), false);
    const double dense_rho = es.eigenvalues().cwiseAbs().maxCoeff();
    CHECK(dense_rho == doctest::Approx(2).epsilon(1e-9));
    CHECK(nonbacktracking_matrix(g).spectral_radius() == doctest::Approx(2).epsilon(1e-6));
  }
  SUBCASE("forest is nilpotent") {
    CHECK(nonbacktracking_matrix(graph_of(4, {{0, 1}, {1, 2}, {1, 3}})).spectral_radius() == 0);
  }
  SUBCASE("Erdos-Renyi: rho close to the mean degree") {
    const auto s = sample_sbm({2000, 2, 3.0, 3.0}, 77);
    const double rho = nonbacktracking_matrix(s.graph).spectral_radius(5000, 1e-9);
    const double c = s.graph.average_degree();
    CHECK(std::abs(rho - c) <= 0.1 * c);
  }
  CHECK_THROWS_AS(nonbacktracking_matrix(graph_of(3, {})), GraphError);
}

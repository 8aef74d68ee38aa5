#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "cdgnn/graph.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace cdgnn;

namespace {

SparseGraph make(std::size_t n, oracle::EdgePairs e) { return build_graph(n, e); }
SparseGraph k3() { return make(3, {{0, 1}, {1, 2}, {0, 2}}); }
SparseGraph path(std::size_t n) {
  oracle::EdgePairs e;
  for (std::size_t i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return make(n, e);
}

}  // namespace

TEST_CASE("build_graph canonicalizes") {
  const auto g = k3();
  CHECK(g.num_nodes() == 3);
  CHECK(g.num_edges() == 3);

  const auto dup = make(2, {{0, 1}, {1, 0}});
  CHECK(dup.num_edges() == 1);

  const auto p4 = path(4);
  const auto deg = degree_vector(p4);
  CHECK(deg(0, 0) == 1);
  CHECK(deg(1, 0) == 2);
  CHECK(deg(2, 0) == 2);
  CHECK(deg(3, 0) == 1);

  CHECK_THROWS_AS(make(3, {{0, 3}}), GraphError);
  CHECK_THROWS_AS(make(3, {{-1, 2}}), GraphError);
  CHECK_THROWS_AS(make(3, {{1, 1}}), GraphError);
}

TEST_CASE("SparseGraph invariants on random graphs") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto edges = oracle::random_edges(25, 0.2, seed);
    // add reversed duplicates to exercise collapsing
    const auto copy = edges;
    for (auto [a, b] : copy) edges.emplace_back(b, a);
    const auto g = build_graph(25, edges);
    CHECK(2 * g.num_edges() == g.col_indices().size());
    for (NodeId i = 0; i < 25; ++i) {
      const auto row = g.neighbors(i);
      CHECK(std::is_sorted(row.begin(), row.end()));
      CHECK(std::adjacent_find(row.begin(), row.end()) == row.end());
      for (NodeId j : row) {
        CHECK(j != i);
        CHECK(g.has_edge(j, i));
      }
    }
    CHECK(std::is_sorted(g.edges().begin(), g.edges().end()));
    CHECK(g.num_edges() == copy.size());
  }
}

TEST_CASE("adjacency, degree and broadcast operators") {
  const auto g = k3();
  const FeatureMatrix ones(3, 1, 1.0);
  CHECK(adjacency_apply(g, ones) == FeatureMatrix(3, 1, 2.0));
  CHECK(degree_apply(g, ones) == FeatureMatrix(3, 1, 2.0));

  const auto p3 = path(3);
  CHECK(adjacency_apply(p3, FeatureMatrix::column({1, 0, 0})) == FeatureMatrix::column({0, 1, 0}));

  const auto iso = make(3, {{0, 1}});
  const auto d = degree_apply(iso, FeatureMatrix(3, 2, 5.0));
  CHECK(d(2, 0) == 0);
  CHECK(d(2, 1) == 0);

  CHECK(broadcast_apply(FeatureMatrix::column({1, 3})) == FeatureMatrix::column({2, 2}));
  const FeatureMatrix c(4, 2, 1.5);
  CHECK(broadcast_apply(c) == c);

  CHECK_THROWS_AS(adjacency_apply(g, FeatureMatrix(4, 1)), ShapeError);
  CHECK_THROWS_AS(degree_apply(g, FeatureMatrix(2, 1)), ShapeError);
}

TEST_CASE("operators match dense oracles and are linear") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const std::size_t n = 20;
    const auto edges = oracle::random_edges(n, 0.25, seed);
    const auto g = build_graph(n, edges);
    const auto dense_a = oracle::adjacency(n, edges);
    const auto x = oracle::random_dense(n, 3, seed + 100);
    const auto y = oracle::random_dense(n, 3, seed + 200);

    const auto ax = adjacency_apply(g, oracle::to_matrix(x));
    CHECK(oracle::max_abs_diff(oracle::from_matrix(ax), oracle::matmul(dense_a, x)) < 1e-12);

    auto dx = oracle::zeros(n, 3);
    for (std::size_t i = 0; i < n; ++i) {
      double deg = 0;
      for (double v : dense_a[i]) deg += v;
      for (std::size_t c = 0; c < 3; ++c) dx[i][c] = deg * x[i][c];
    }
    CHECK(oracle::max_abs_diff(oracle::from_matrix(degree_apply(g, oracle::to_matrix(x))), dx) <
          1e-12);

    // linearity: f(2x - 3y) = 2 f(x) - 3 f(y)
    auto combo = oracle::zeros(n, 3);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < 3; ++c) combo[i][c] = 2 * x[i][c] - 3 * y[i][c];
    const auto X = oracle::to_matrix(x), Y = oracle::to_matrix(y), Z = oracle::to_matrix(combo);
    auto check_linear = [&](auto f) {
      const auto fz = f(Z), fx = f(X), fy = f(Y);
      double scale = 1;
      for (std::size_t i = 0; i < fz.size(); ++i) scale = std::max(scale, std::abs(fz.data()[i]));
      for (std::size_t i = 0; i < fz.size(); ++i)
        CHECK(std::abs(fz.data()[i] - (2 * fx.data()[i] - 3 * fy.data()[i])) <= 1e-12 * scale);
    };
    check_linear([&](const FeatureMatrix& m) { return adjacency_apply(g, m); });
    check_linear([&](const FeatureMatrix& m) { return degree_apply(g, m); });
    check_linear([&](const FeatureMatrix& m) { return broadcast_apply(m); });

    // U is a projection
    const auto ux = broadcast_apply(X);
    CHECK(max_abs_diff(broadcast_apply(ux), ux) < 1e-14);
  }
}

TEST_CASE("power_graph matches dense boolean powers") {
  const auto p5 = path(5);
  const auto sq = power_graph(p5, 1);
  std::vector<Edge> want{{0, 2}, {1, 3}, {2, 4}};
  CHECK(std::vector<Edge>(sq.edges().begin(), sq.edges().end()) == want);

  const auto k = power_graph(k3(), 1);
  CHECK(k.num_edges() == 3);

  const auto g0 = power_graph(p5, 0);
  CHECK(std::equal(g0.edges().begin(), g0.edges().end(), p5.edges().begin(), p5.edges().end()));

  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const std::size_t n = 5 + seed * 2;  // up to 27
    const auto edges = oracle::random_edges(n, 0.12, seed + 31);
    const auto g = build_graph(n, edges);
    const auto dense = oracle::adjacency(n, edges);
    for (int level = 0; level <= 3; ++level) {
      const auto pw = power_graph(g, level);
      const auto ref = oracle::boolean_power(dense, 1u << level);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const bool want_edge = i != j && ref[i][j] > 0;
          CHECK(pw.has_edge(static_cast<NodeId>(i), static_cast<NodeId>(j)) == want_edge);
        }
    }
  }
  CHECK_THROWS_AS(power_graph(p5, -1), GraphError);
}

TEST_CASE("line graph examples") {
  const auto lk3 = line_graph(k3());
  CHECK(lk3.graph.num_nodes() == 3);
  CHECK(lk3.graph.num_edges() == 3);

  const auto lp3 = line_graph(path(3));
  CHECK(lp3.graph.num_nodes() == 2);
  CHECK(lp3.graph.num_edges() == 1);
  CHECK(lp3.incidence.num_nodes() == 3);
  CHECK(lp3.incidence.num_edges() == 2);
  const auto col_sums = lp3.incidence.apply_transpose(FeatureMatrix(3, 1, 1.0));
  CHECK(col_sums == FeatureMatrix(2, 1, 2.0));

  // star K_{1,3}: brute-force enumeration of intersecting edge pairs
  const auto star = make(4, {{0, 1}, {0, 2}, {0, 3}});
  const auto ls = line_graph(star);
  std::size_t pairs = 0;
  const auto e = star.edges();
  for (std::size_t a = 0; a < e.size(); ++a)
    for (std::size_t b = a + 1; b < e.size(); ++b)
      if (e[a].u == e[b].u || e[a].u == e[b].v || e[a].v == e[b].u || e[a].v == e[b].v) {
        ++pairs;
        CHECK(ls.graph.has_edge(static_cast<NodeId>(a), static_cast<NodeId>(b)));
      }
  CHECK(pairs == 3);
  CHECK(ls.graph.num_edges() == pairs);

  CHECK_THROWS_AS(line_graph(make(3, {})), GraphError);
}

TEST_CASE("line graph and incidence invariants") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t n = 30;
    const auto g = build_graph(n, oracle::random_edges(n, 0.1, seed + 5));
    if (g.num_edges() == 0) continue;
    const auto lg = line_graph(g);
    CHECK(lg.graph.num_nodes() == g.num_edges());
    const auto edges = g.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
      CHECK(lg.graph.degree(static_cast<NodeId>(e)) ==
            g.degree(edges[e].u) + g.degree(edges[e].v) - 2);
    }
    // P 1 = deg, P^T 1 = 2
    const auto p1 = lg.incidence.apply(FeatureMatrix(g.num_edges(), 1, 1.0));
    CHECK(p1 == degree_vector(g));
    const auto pt1 = lg.incidence.apply_transpose(FeatureMatrix(n, 1, 1.0));
    CHECK(pt1 == FeatureMatrix(g.num_edges(), 1, 2.0));
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto r = lg.incidence.t_row_offsets();
      CHECK(r[e + 1] - r[e] == 2);
    }
  }
}

TEST_CASE("edge list IO round trip with comments and gzip-agnostic reader") {
  const auto dir = std::filesystem::temp_directory_path() / "cdgnn_graph_io";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "g.txt").string();
  {
    std::ofstream out(path);
    out << "# Undirected graph\n# FromNodeId\tToNodeId\n0\t1\n1\t2\n\n2\t0\n1\t0\n";
  }
  const auto g = read_edge_list(path);
  CHECK(g.num_nodes() == 3);
  CHECK(g.num_edges() == 3);

  const auto iso = make(6, {{0, 1}, {2, 3}});
  write_edge_list(iso, path);
  const auto back = read_edge_list(path);
  CHECK(back.num_nodes() == 6);
  CHECK(std::equal(back.edges().begin(), back.edges().end(), iso.edges().begin(), iso.edges().end()));

  {
    std::ofstream out(path);
    out << "0\tx\n";
  }
  CHECK_THROWS(read_edge_list(path));
  std::filesystem::remove_all(dir);
}

TEST_CASE("relabeling permutes structure") {
  const auto g = path(4);
  const std::vector<NodeId> perm{3, 2, 1, 0};
  const auto r = g.relabeled(perm);
  CHECK(r.has_edge(3, 2));
  CHECK(r.has_edge(1, 0));
  CHECK(!r.has_edge(0, 3));
}

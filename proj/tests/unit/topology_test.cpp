#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "topohead/error.hpp"
#include "topohead/topology.hpp"

using namespace topohead;
using topo::DistanceMatrix;

namespace {

DistanceMatrix to_dm(const oracle::Graph& g) { return DistanceMatrix::from_values(g.n, g.w); }

oracle::Graph line_graph(std::vector<double> coords) {
  oracle::Graph g{coords.size(), std::vector<double>(coords.size() * coords.size())};
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = 0; j < g.n; ++j) g.w[i * g.n + j] = std::abs(coords[i] - coords[j]);
  return g;
}

std::vector<double> weights_of(const std::vector<topo::Edge>& edges) {
  std::vector<double> w;
  for (const auto& e : edges) w.push_back(e.weight);
  return w;
}

}  // namespace

TEST_CASE("mst of two vertices is the single edge") {
  DistanceMatrix d(2);
  d.set(0, 1, 0.5);
  const auto tree = topo::mst(d);
  REQUIRE(tree.size() == 1);
  CHECK(tree[0] == topo::Edge{0, 1, 0.5});
  CHECK(topo::h0_barcode(d).bars == std::vector<double>{0.5});
  CHECK(topo::h0_mean(topo::h0_barcode(d)) == 0.5);
}

TEST_CASE("collinear points 0,1,3,7: enumeration oracle agrees") {
  const auto g = line_graph({0, 1, 3, 7});
  std::size_t trees = 0;
  const auto expected = oracle::enumerate_mst_weights(g, &trees);
  CHECK(trees == 16);  // Cayley: 4^(4-2)
  CHECK(expected == std::vector<double>{1, 2, 4});

  const auto d = to_dm(g);
  CHECK(weights_of(topo::mst(d)) == expected);
  CHECK(topo::total_weight(topo::mst(d)) == 7.0);
  CHECK(topo::h0_barcode(d).bars == expected);
  CHECK(topo::h0_mean(topo::h0_barcode(d)) == doctest::Approx(7.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("equal weights: every tree has weight (n-1)w") {
  for (std::size_t n : {2u, 5u, 9u}) {
    DistanceMatrix d(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) d.set(i, j, 0.3);
    const auto tree = topo::mst(d);
    CHECK(tree.size() == n - 1);
    CHECK(topo::total_weight(tree) == doctest::Approx(0.3 * static_cast<double>(n - 1)));
    CHECK(topo::h0_mean(topo::h0_barcode(d)) == doctest::Approx(0.3));
    // Tie-break (weight, u, v): a star around vertex 0.
    for (std::size_t k = 0; k < tree.size(); ++k) CHECK(tree[k] == topo::Edge{0, k + 1, 0.3});
  }
}

TEST_CASE("single vertex: no bars and an undefined mean") {
  const DistanceMatrix d(1);
  CHECK(topo::mst(d).empty());
  const auto b = topo::h0_barcode(d);
  CHECK(b.bars.empty());
  try {
    topo::h0_mean(b);
    FAIL("expected undefined feature");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UndefinedFeature);
  }
}

TEST_CASE("distance matrix validation") {
  CHECK_THROWS_AS(DistanceMatrix::from_values(2, {0, 1, 2, 0}), Error);
  CHECK_THROWS_AS(DistanceMatrix::from_values(2, {1, 1, 1, 0}), Error);
  CHECK_THROWS_AS(DistanceMatrix::from_values(2, {0, -1, -1, 0}), Error);
  DistanceMatrix d(3);
  CHECK_THROWS_AS(d.set(1, 1, 0.2), Error);
}

TEST_CASE("random graphs: barcode equals sorted Kruskal weights exactly") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> size(2, 12);
  for (int trial = 0; trial < 300; ++trial) {
    const auto g = oracle::random_graph(size(rng), rng, trial % 3 == 0);
    const auto b = topo::h0_barcode(to_dm(g));
    CHECK(b.bars == oracle::kruskal_weights(g));
    CHECK(b.merges.size() == g.n - 1);
  }
  for (int trial = 0; trial < 40; ++trial) {
    const auto g = oracle::random_graph(2 + static_cast<std::size_t>(trial % 5), rng, trial % 2);
    CHECK(topo::h0_barcode(to_dm(g)).bars == oracle::enumerate_mst_weights(g));
  }
}

TEST_CASE("merges end in one component and are non-decreasing") {
  std::mt19937_64 rng(9);
  const auto g = oracle::random_graph(10, rng);
  const auto b = topo::h0_barcode(to_dm(g));
  topo::DisjointSets sets(g.n);
  for (std::size_t k = 0; k < b.merges.size(); ++k) {
    if (k) CHECK(b.merges[k - 1].threshold <= b.merges[k].threshold);
    CHECK(b.merges[k].survivor < b.merges[k].absorbed);
    CHECK(sets.unite(b.merges[k].edge.u, b.merges[k].edge.v));
  }
  CHECK(sets.component_count() == 1);
}

TEST_CASE("h0 mean is permutation invariant and scales exactly") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = oracle::random_graph(7, rng, trial % 2 == 0);
    std::vector<std::size_t> perm(g.n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    oracle::Graph p = g;
    for (std::size_t i = 0; i < g.n; ++i)
      for (std::size_t j = 0; j < g.n; ++j) p.w[i * g.n + j] = g(perm[i], perm[j]);
    const double base = topo::h0_mean(topo::h0_barcode(to_dm(g)));
    CHECK(topo::h0_barcode(to_dm(p)).bars == topo::h0_barcode(to_dm(g)).bars);
    CHECK(topo::h0_mean(topo::h0_barcode(to_dm(p))) == doctest::Approx(base).epsilon(1e-12));

    for (double c : {0.5, 2.0, 8.0}) {
      oracle::Graph s = g;
      for (auto& w : s.w) w *= c;
      const auto bs = topo::h0_barcode(to_dm(s));
      const auto b0 = topo::h0_barcode(to_dm(g));
      for (std::size_t k = 0; k < b0.bars.size(); ++k) CHECK(bs.bars[k] == c * b0.bars[k]);
      CHECK(topo::h0_mean(bs) == c * base);
    }
  }
}

TEST_CASE("pairwise distances") {
  const std::vector<double> same{1, 2, 1, 2, 1, 2};
  const auto z = topo::pairwise_distance(topo::RowMatrix<double>{same, 3, 2}, topo::Metric::L2);
  CHECK(std::all_of(z.values().begin(), z.values().end(), [](double v) { return v == 0.0; }));

  const std::vector<double> tri{0, 0, 3, 4};
  CHECK(topo::pairwise_distance(topo::RowMatrix<double>{tri, 2, 2}, topo::Metric::L2)(0, 1) == 5.0);

  const std::vector<float> rows{0.9f, 0.1f, 0.4f, 0.6f};
  const auto l1 = topo::pairwise_distance(topo::RowMatrix<float>{rows, 2, 2}, topo::Metric::L1);
  const double expected = std::abs(double(0.9f) - double(0.4f)) + std::abs(double(0.1f) - double(0.6f));
  CHECK(l1(0, 1) == expected);
  CHECK(l1(0, 1) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(l1(1, 0) == l1(0, 1));
  CHECK(l1(0, 0) == 0.0);
}

TEST_CASE("rtd0 examples") {
  DistanceMatrix a(2), b(2);
  a.set(0, 1, 1.0);
  b.set(0, 1, 0.3);
  CHECK(topo::rtd0(a, b) == doctest::Approx(0.35).epsilon(1e-15));
  CHECK(topo::rtd0(a, a) == 0.0);
  CHECK_THROWS_AS(topo::rtd0(a, DistanceMatrix(3)), Error);
}

TEST_CASE("rtd0 with one lowered entry is half the MST-total drop") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> size(3, 6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto ga = oracle::random_graph(size(rng), rng);
    auto gb = ga;
    std::uniform_int_distribution<std::size_t> vtx(0, ga.n - 1);
    std::size_t i = vtx(rng), j = vtx(rng);
    while (j == i) j = vtx(rng);
    gb.w[i * ga.n + j] = gb.w[j * ga.n + i] = 0.5 * ga(i, j);
    double wa = 0, wb = 0;
    for (double w : oracle::enumerate_mst_weights(ga)) wa += w;
    for (double w : oracle::enumerate_mst_weights(gb)) wb += w;
    CHECK(topo::rtd0(to_dm(ga), to_dm(gb)) == doctest::Approx(0.5 * (wa - wb)).epsilon(1e-12));
  }
}

TEST_CASE("rtd0 properties on random pairs") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto ga = oracle::random_graph(6, rng), gb = oracle::random_graph(6, rng);
    const double ab = topo::rtd0(to_dm(ga), to_dm(gb));
    CHECK(ab >= 0.0);
    CHECK(ab == topo::rtd0(to_dm(gb), to_dm(ga)));
    CHECK(ab == doctest::Approx(oracle::rtd_from_totals(ga, gb)).epsilon(1e-12));
  }
}

TEST_CASE("merge trace examples") {
  const auto d = to_dm(line_graph({0, 1, 3, 7}));
  const std::vector<double> eps{0.5, 2.0, 4.0, 10.0};
  const auto trace = topo::merge_trace(d, eps);
  CHECK(trace.membership[0] == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(trace.membership[1] == std::vector<std::size_t>{0, 0, 0, 3});
  CHECK(trace.membership[2] == std::vector<std::size_t>{0, 0, 0, 0});
  CHECK(trace.component_count(0) == 4);
  CHECK(trace.component_count(1) == 2);
  CHECK(trace.component_count(3) == 1);
  const std::vector<double> unsorted{1.0, 0.5};
  CHECK_THROWS_AS(topo::merge_trace(d, unsorted), Error);
}

TEST_CASE("merge trace component count is non-increasing") {
  std::mt19937_64 rng(8);
  const auto g = oracle::random_graph(12, rng, true);
  std::vector<double> eps;
  for (int k = 0; k <= 20; ++k) eps.push_back(0.05 * k);
  const auto trace = topo::merge_trace(to_dm(g), eps);
  for (std::size_t k = 1; k < eps.size(); ++k) {
    CHECK(trace.component_count(k) <= trace.component_count(k - 1));
  }
  CHECK(trace.component_count(eps.size() - 1) == 1);
  // Oracle: a vertex pair shares a component iff connected via edges <= eps.
  for (std::size_t k = 0; k < eps.size(); ++k) {
    oracle::Dsu dsu(g.n);
    for (std::size_t i = 0; i < g.n; ++i)
      for (std::size_t j = i + 1; j < g.n; ++j)
        if (g(i, j) <= eps[k]) dsu.join(i, j);
    for (std::size_t v = 0; v < g.n; ++v) CHECK(trace.membership[k][v] == dsu.find(v));
  }
}

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "topohead/attention_features.hpp"
#include "topohead/synthetic.hpp"

using namespace topohead;
using attn::AttentionMap;

namespace {

const std::vector<float> kTwo{0.9f, 0.1f, 0.4f, 0.6f};

std::vector<float> uniform(std::size_t n) {
  return std::vector<float>(n * n, 1.0f / static_cast<float>(n));
}

std::vector<float> identity(std::size_t n) {
  std::vector<float> a(n * n, 0.0f);
  for (std::size_t i = 0; i < n; ++i) a[i * n + i] = 1.0f;
  return a;
}

io::Tensor attention_tensor(std::size_t n, const std::vector<float>& head) {
  io::Tensor t;
  t.dtype = io::DType::Float32;
  t.shape = {12, 12, static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n)};
  for (std::size_t k = 0; k < attn::kHeadCount; ++k) t.data.insert(t.data.end(), head.begin(), head.end());
  return t;
}

}  // namespace

TEST_CASE("head index tags and flat order") {
  CHECK(attn::HeadIndex{3, 7}.tag() == "L03_H07");
  CHECK(attn::HeadIndex{3, 7}.flat() == 43);
  CHECK(attn::HeadIndex::from_flat(143) == attn::HeadIndex{11, 11});
  CHECK(attn::HeadIndex{0, 11} < attn::HeadIndex{1, 0});
}

TEST_CASE("symmetrized adjacency") {
  const auto d = attn::sym_adjacency(AttentionMap(kTwo, 2));
  CHECK(d(0, 1) == doctest::Approx(0.6).epsilon(1e-7));
  CHECK(d(0, 0) == 0.0);
  CHECK(d(1, 1) == 0.0);

  const auto u = uniform(5);
  const auto du = attn::sym_adjacency(AttentionMap(u, 5));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      if (i != j) CHECK(du(i, j) == doctest::Approx(0.8).epsilon(1e-7));

  const auto id = identity(4);
  const auto di = attn::sym_adjacency(AttentionMap(id, 4));
  CHECK(di(1, 3) == 1.0);

  const std::vector<float> bad{1.5f, -0.5f, 0.0f, 1.0f};
  CHECK_THROWS_AS(attn::sym_adjacency(AttentionMap(bad, 2)), Error);
}

TEST_CASE("asymmetry sum") {
  CHECK(attn::asymmetry_sum(AttentionMap(identity(5), 5)) == 0.0);
  CHECK(attn::asymmetry_sum(AttentionMap(kTwo, 2)) == doctest::Approx(0.025).epsilon(1e-7));
  CHECK(attn::asymmetry_sum(AttentionMap(uniform(4), 4)) == doctest::Approx(0.09375).epsilon(1e-12));
}

TEST_CASE("diagonal means") {
  const auto di = attn::diagonal_means(AttentionMap(identity(4), 4));
  CHECK(di.main == 1.0);
  CHECK(di.upper == 0.0);
  CHECK(di.lower == 0.0);

  const auto du = attn::diagonal_means(AttentionMap(uniform(4), 4));
  CHECK(du.main == 0.25);
  CHECK(du.upper == 0.25);
  CHECK(du.lower == 0.25);

  const std::vector<float> a{.5f, .5f, 0, .2f, .3f, .5f, 0, .4f, .6f};
  const auto d = attn::diagonal_means(AttentionMap(a, 3));
  CHECK(d.main == doctest::Approx(1.4 / 3).epsilon(1e-7));
  CHECK(d.upper == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(d.lower == doctest::Approx(0.3).epsilon(1e-7));
}

TEST_CASE("head-level H0 means") {
  CHECK(attn::h0m_sym(AttentionMap(uniform(4), 4)) == doctest::Approx(0.75).epsilon(1e-7));
  CHECK(attn::h0m_sym(AttentionMap(kTwo, 2)) == doctest::Approx(0.6).epsilon(1e-7));
  CHECK(attn::h0m_sym(AttentionMap(identity(3), 3)) == 1.0);

  CHECK(attn::h0m_pc(AttentionMap(uniform(6), 6)) == 0.0);
  CHECK(attn::h0m_pc(AttentionMap(kTwo, 2)) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(attn::h0m_pc(AttentionMap(identity(3), 3)) == 2.0);
}

TEST_CASE("mixture heads have closed-form features") {
  for (double t : {0.0, 0.25, 0.7}) {
    std::vector<float> a(36);
    synth::fill_mixture_head(a, 6, t);
    CHECK(attn::h0m_sym(AttentionMap(a, 6)) == doctest::Approx(1.0 - (1.0 - t) / 6).epsilon(1e-6));
    CHECK(attn::h0m_pc(AttentionMap(a, 6)) == doctest::Approx(2.0 * t).epsilon(1e-6));
  }
}

TEST_CASE("random heads: invariants and oracle agreement") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> size(2, 9);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = size(rng);
    std::vector<float> a(n * n);
    synth::fill_random_head(a, n, 1.5, rng);
    const AttentionMap m(a, n);

    // Upper + lower + trace partition the total mass.
    std::vector<float> at(n * n);
    double total = 0.0, trace = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        at[j * n + i] = a[i * n + j];
        total += a[i * n + j];
        if (i == j) trace += a[i * n + j];
      }
    const double nn = static_cast<double>(n * n);
    CHECK(attn::asymmetry_sum(m) + attn::asymmetry_sum(AttentionMap(at, n)) + trace / nn ==
          doctest::Approx(total / nn).epsilon(1e-6));

    const double sym = attn::h0m_sym(m), pc = attn::h0m_pc(m);
    CHECK(sym >= 0.0);
    CHECK(sym <= 1.0);
    CHECK(pc >= 0.0);
    CHECK(pc <= 2.0 + 1e-9);

    // Independent graph construction and Kruskal.
    oracle::Graph gs{n, std::vector<double>(n * n, 0.0)}, gp{n, std::vector<double>(n * n, 0.0)};
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        gs.w[i * n + j] = 1.0 - std::max<double>(a[i * n + j], a[j * n + i]);
        for (std::size_t k = 0; k < n; ++k)
          gp.w[i * n + j] += std::abs(double(a[i * n + k]) - double(a[j * n + k]));
      }
    const auto ks = oracle::kruskal_weights(gs), kp = oracle::kruskal_weights(gp);
    CHECK(sym == doctest::Approx(std::accumulate(ks.begin(), ks.end(), 0.0) / double(n - 1)).epsilon(1e-12));
    CHECK(pc == doctest::Approx(std::accumulate(kp.begin(), kp.end(), 0.0) / double(n - 1)).epsilon(1e-12));

    // Simultaneous row/column permutation.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<float> p(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) p[i * n + j] = a[perm[i] * n + perm[j]];
    CHECK(attn::h0m_sym(AttentionMap(p, n)) == doctest::Approx(sym).epsilon(1e-12));
    CHECK(attn::h0m_pc(AttentionMap(p, n)) == doctest::Approx(pc).epsilon(1e-12));
  }
}

TEST_CASE("feature block names and counts") {
  const auto& names = attn::attention_feature_names();
  REQUIRE(names.size() == 864);
  CHECK(names.front() == "L00_H00_asym");
  CHECK(names[5] == "L00_H00_h0m_pc");
  CHECK(names[43 * 6 + 4] == "L03_H07_h0m_sym");
  CHECK(names.back() == "L11_H11_h0m_pc");
  CHECK(attn::parse_head_feature("diagm1") == attn::HeadFeature::DiagMinus1);
  CHECK_THROWS_AS(attn::parse_head_feature("diag2"), Error);
}

TEST_CASE("uniform attention tensor gives constant features") {
  const std::size_t n = 5;
  const auto block = attn::attention_feature_block(attention_tensor(n, uniform(n)));
  REQUIRE(block.values.size() == 864);
  CHECK(block.algebraic().size() == 576);
  CHECK(block.topological().size() == 288);
  for (std::size_t f = 0; f < attn::kHeadCount; ++f) {
    const auto h = attn::HeadIndex::from_flat(f);
    CHECK(block.at(h, attn::HeadFeature::H0mPc) == 0.0);
    CHECK(block.at(h, attn::HeadFeature::H0mSym) == doctest::Approx(0.8).epsilon(1e-7));
    CHECK(block.at(h, attn::HeadFeature::Diag0) == block.at({0, 0}, attn::HeadFeature::Diag0));
    CHECK(block.at(h, attn::HeadFeature::Asym) == block.at({0, 0}, attn::HeadFeature::Asym));
  }
}

TEST_CASE("swapping two heads swaps exactly their features") {
  std::mt19937_64 rng(3);
  const auto bundle = synth::random_bundle(6, 8, rng);
  auto swapped = bundle.attention;
  const std::size_t n = 6, hs = n * n;
  const std::size_t x = attn::HeadIndex{1, 2}.flat(), y = attn::HeadIndex{9, 10}.flat();
  std::swap_ranges(swapped.data.begin() + x * hs, swapped.data.begin() + (x + 1) * hs,
                   swapped.data.begin() + y * hs);
  const auto a = attn::attention_feature_block(bundle.attention);
  const auto b = attn::attention_feature_block(swapped);
  for (std::size_t f = 0; f < attn::kHeadCount; ++f) {
    const std::size_t src = f == x ? y : (f == y ? x : f);
    for (std::size_t k = 0; k < attn::kFeaturesPerHead; ++k)
      CHECK(b.values[f * 6 + k] == a.values[src * 6 + k]);
  }
  CHECK(attn::attention_feature_block(bundle.attention).values == a.values);
}

TEST_CASE("a failing head is reported by index") {
  auto t = attention_tensor(3, uniform(3));
  t.data[attn::HeadIndex{4, 9}.flat() * 9 + 1] = 1.7f;
  try {
    attn::attention_feature_block(t);
    FAIL("expected a head error");
  } catch (const attn::HeadError& e) {
    CHECK(e.head() == attn::HeadIndex{4, 9});
  }
}

TEST_CASE("head feature grid matches the block") {
  std::mt19937_64 rng(4);
  const auto bundle = synth::random_bundle(5, 6, rng);
  const auto block = attn::attention_feature_block(bundle.attention);
  const auto grid = attn::head_feature_grid(bundle.attention, attn::HeadFeature::H0mPc);
  for (std::size_t f = 0; f < attn::kHeadCount; ++f)
    CHECK(grid[f] == block.at(attn::HeadIndex::from_flat(f), attn::HeadFeature::H0mPc));
}

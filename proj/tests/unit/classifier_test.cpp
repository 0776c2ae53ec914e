#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <random>

#include "oracles.hpp"
#include "topohead/classifier.hpp"
#include "topohead/error.hpp"

using namespace topohead;
using clf::Matrix;

namespace {

struct Problem {
  Matrix x;
  std::vector<std::string> labels;
  std::vector<std::size_t> y;
};

// Gaussian blobs, one per class, centered on distinct axes.
Problem blobs(std::size_t n, std::size_t d, std::size_t k, double spread, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, spread);
  Problem p{Matrix(n, d), {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % k;
    for (std::size_t j = 0; j < d; ++j) p.x(i, j) = g(rng) + (j == c % d ? 1.0 : 0.0);
    p.y.push_back(c);
    p.labels.push_back(std::string(1, static_cast<char>('a' + c)));
  }
  return p;
}

std::vector<std::vector<double>> rows_of(const Matrix& x) {
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < x.rows; ++r) out.emplace_back(x.row(r).begin(), x.row(r).end());
  return out;
}

}  // namespace

TEST_CASE("standardizer uses population std and zeroes constant columns") {
  const Matrix x(4, 2, {1, 5, 2, 5, 3, 5, 4, 5});
  const auto s = clf::fit_standardizer(x);
  CHECK(s.means[0] == 2.5);
  CHECK(s.scales[0] == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
  CHECK(s.scales[1] == clf::kScaleFloor);
  const auto z = s.apply(x);
  for (std::size_t r = 0; r < 4; ++r) CHECK(z(r, 1) == 0.0);
  double mean = 0, var = 0;
  for (std::size_t r = 0; r < 4; ++r) mean += z(r, 0) / 4;
  for (std::size_t r = 0; r < 4; ++r) var += (z(r, 0) - mean) * (z(r, 0) - mean) / 4;
  CHECK(mean == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(s.apply(Matrix(2, 3)), Error);
}

TEST_CASE("softmax loss gradient matches central differences") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 6, d = 4, k = 3;
    Problem p = blobs(n, d, k, 1.0, rng);
    clf::SoftmaxLoss loss{p.x, p.y, k};
    Matrix w(k, d);
    for (auto& v : w.data) v = g(rng);
    std::vector<double> b(k);
    for (auto& v : b) v = g(rng);
    Matrix gw(k, d);
    std::vector<double> gb;
    const double value = loss.gradient(w, b, gw, gb);
    CHECK(value == doctest::Approx(loss.value(w, b)).epsilon(1e-14));
    const double h = 1e-5;
    for (std::size_t q = 0; q < w.data.size(); ++q) {
      Matrix wp = w, wm = w;
      wp.data[q] += h, wm.data[q] -= h;
      const double fd = (loss.value(wp, b) - loss.value(wm, b)) / (2 * h);
      CHECK(std::abs(fd - gw.data[q]) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
    for (std::size_t c = 0; c < k; ++c) {
      auto bp = b, bm = b;
      bp[c] += h, bm[c] -= h;
      const double fd = (loss.value(w, bp) - loss.value(w, bm)) / (2 * h);
      CHECK(std::abs(fd - gb[c]) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("training is monotone and reaches the coordinate-descent optimum") {
  std::mt19937_64 rng(42);
  for (std::size_t k : {2u, 3u}) {
    Problem p = blobs(30, 3, k, 0.8, rng);
    for (double lambda : {1e-3, 1e-2, 1e-1}) {
      std::vector<double> trace;
      const auto model = clf::train_l1_logreg(p.x, p.labels, {.lambda = lambda}, &trace);
      REQUIRE(trace.size() >= 2);
      for (std::size_t s = 1; s < trace.size(); ++s) CHECK(trace[s] <= trace[s - 1] + 1e-12);
      CHECK(model.converged);
      const double mine = clf::objective(model, p.x, p.labels);
      const double ref = oracle::coordinate_descent_logreg(rows_of(p.x), p.y, k, lambda, 20000);
      CHECK(mine <= ref + 1e-6);
      CHECK(std::abs(mine - ref) < 1e-5);

      // Subgradient optimality of the L1 penalty.
      clf::SoftmaxLoss loss{p.x, p.y, k};
      Matrix gw(k, 3);
      std::vector<double> gb;
      loss.gradient(model.weights, model.bias, gw, gb);
      for (std::size_t q = 0; q < gw.data.size(); ++q) {
        const double w = model.weights.data[q];
        if (w == 0.0) CHECK(std::abs(gw.data[q]) <= lambda + 1e-4);
        else CHECK(std::abs(gw.data[q] + lambda * (w > 0 ? 1 : -1)) <= 1e-4);
      }
      for (double v : gb) CHECK(std::abs(v) <= 1e-4);
    }
  }
}

TEST_CASE("stronger penalties never add nonzero weights") {
  std::mt19937_64 rng(43);
  Problem p = blobs(40, 8, 3, 1.0, rng);
  std::size_t prev = 0;
  for (double lambda : {1e-4, 1e-2, 1.0, 1e2}) {
    const auto model = clf::train_l1_logreg(p.x, p.labels, {.lambda = lambda});
    CHECK(model.zero_weight_count() >= prev);
    prev = model.zero_weight_count();
  }
  CHECK(prev == 24);
}

TEST_CASE("huge penalty predicts the majority class") {
  std::mt19937_64 rng(44);
  Problem p = blobs(10, 2, 2, 1.0, rng);
  p.labels[1] = "a";  // 6 "a" vs 4 "b"
  p.y[1] = 0;
  const auto model = clf::train_l1_logreg(p.x, p.labels, {.lambda = 1e6});
  CHECK(model.zero_weight_count() == 4);
  for (const auto& label : clf::predict(model, p.x)) CHECK(label == "a");
  const auto proba = clf::predict_proba(model, p.x);
  CHECK(proba(0, 0) == doctest::Approx(0.6).epsilon(1e-6));
}

TEST_CASE("separable data is classified perfectly") {
  std::mt19937_64 rng(45);
  Problem p = blobs(40, 3, 2, 0.05, rng);
  const auto model = clf::train_l1_logreg(p.x, p.labels, {.lambda = 1e-4});
  CHECK(clf::predict(model, p.x) == p.labels);
}

TEST_CASE("predict_proba rows sum to one and standardizer is applied") {
  std::mt19937_64 rng(46);
  Problem p = blobs(24, 4, 3, 0.7, rng);
  for (auto& v : p.x.data) v = 50.0 + 10.0 * v;
  const auto s = clf::fit_standardizer(p.x);
  auto model = clf::train_l1_logreg(s.apply(p.x), p.labels, {.lambda = 1e-3});
  const auto plain = clf::predict(model, s.apply(p.x));
  model.standardizer = s;
  CHECK(clf::predict(model, p.x) == plain);
  const auto proba = clf::predict_proba(model, p.x);
  for (std::size_t r = 0; r < proba.rows; ++r) {
    double sum = 0;
    for (double v : proba.row(r)) sum += v;
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("argmax ignores a constant shift of the class scores") {
  std::mt19937_64 rng(47);
  Problem p = blobs(18, 3, 3, 0.6, rng);
  auto model = clf::train_l1_logreg(p.x, p.labels, {.lambda = 1e-3});
  const auto before = clf::predict(model, p.x);
  for (auto& b : model.bias) b += 17.25;
  CHECK(clf::predict(model, p.x) == before);
}

TEST_CASE("training input errors") {
  const Matrix x(3, 1, {0, 1, 2});
  const std::vector<std::string> one{"a", "a", "a"};
  try {
    clf::train_l1_logreg(x, one, {});
    FAIL("expected single-class error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingleClass);
  }
  const std::vector<std::string> two{"a", "b"};
  CHECK_THROWS_AS(clf::train_l1_logreg(x, two, {}), Error);
  const std::vector<std::string> three{"a", "b", "a"};
  CHECK_THROWS_AS(clf::train_l1_logreg(x, three, {.lambda = -1.0}), Error);
  Matrix bad = x;
  bad(1, 0) = std::nan("");
  CHECK_THROWS_AS(clf::train_l1_logreg(bad, three, {}), Error);
}

TEST_CASE("model json roundtrip") {
  std::mt19937_64 rng(48);
  Problem p = blobs(12, 3, 2, 0.5, rng);
  auto model = clf::train_l1_logreg(p.x, p.labels, {.lambda = 1e-2, .seed = 99});
  model.standardizer = clf::fit_standardizer(p.x);
  const auto j = clf::to_json(model);
  CHECK(j.at("seed") == 99);
  CHECK(j.at("n_features") == 3);
  const auto back = clf::model_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.classes == model.classes);
  CHECK(back.weights.data == model.weights.data);
  CHECK(back.bias == model.bias);
  CHECK(back.standardizer.scales == model.standardizer.scales);
  CHECK(clf::predict(back, p.x) == clf::predict(model, p.x));
}

TEST_CASE("pair difference") {
  auto names = std::make_shared<const std::vector<std::string>>(std::vector<std::string>{"x", "y"});
  const FeatureVector a{names, {1.0, -2.0}}, b{names, {3.5, 1.0}};
  const auto d = clf::pair_difference(a, b);
  CHECK(d.values == std::vector<double>{2.5, 3.0});
  auto other = std::make_shared<const std::vector<std::string>>(std::vector<std::string>{"y", "x"});
  CHECK_THROWS_AS(clf::pair_difference(a, FeatureVector{other, {0, 0}}), Error);
}

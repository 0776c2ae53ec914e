#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "topohead/error.hpp"
#include "topohead/metrics.hpp"

using namespace topohead;

TEST_CASE("accuracy") {
  const std::vector<std::string> t{"a", "b", "a", "b"};
  CHECK(clf::accuracy(t, t) == 100.0);
  const std::vector<std::string> wrong{"b", "a", "b", "a"};
  CHECK(clf::accuracy(t, wrong) == 0.0);
  const std::vector<std::string> three{"a", "b", "a", "a"};
  CHECK(clf::accuracy(t, three) == 75.0);
  CHECK_THROWS_AS(clf::accuracy(t, std::vector<std::string>{"a"}), Error);
}

TEST_CASE("eer examples") {
  const std::vector<double> sep{0.9, 0.8, 0.2, 0.1};
  const std::vector<int> lab{1, 1, 0, 0};
  CHECK(clf::eer(sep, lab) == 0.0);
  const std::vector<int> inv{0, 0, 1, 1};
  CHECK(clf::eer(sep, inv) == 100.0);

  const std::vector<double> mixed{0.6, 0.4, 0.7, 0.3};
  CHECK(clf::eer(mixed, lab) == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(oracle::eer_sweep(mixed, lab) == doctest::Approx(50.0).epsilon(1e-12));

  const std::vector<int> single{1, 1, 1, 1};
  try {
    clf::eer(sep, single);
    FAIL("expected single-class error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingleClass);
  }
}

TEST_CASE("eer agrees with the brute-force sweep") {
  std::mt19937_64 rng(51);
  std::uniform_int_distribution<int> size(2, 40), coarse(0, 5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = size(rng);
    std::vector<double> s(n);
    std::vector<int> l(n);
    for (int i = 0; i < n; ++i) {
      l[i] = i % 2;
      s[i] = trial % 2 ? coarse(rng) * 0.2 : u(rng) + 0.3 * l[i];
    }
    const double e = clf::eer(s, l);
    CHECK(e == doctest::Approx(oracle::eer_sweep(s, l)).epsilon(1e-12));
    CHECK(e >= 0.0);
    CHECK(e <= 100.0);

    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = std::exp(3.0 * s[i]) - 4.0;
    CHECK(clf::eer(t, l) == doctest::Approx(e).epsilon(1e-12));
  }
}

#include <doctest.h>

#include <cmath>
#include <set>

#include "callsynth/random.hpp"

using namespace callsynth;

TEST_CASE("fnv1a64 and splitmix64 match published vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("derived seeds separate streams and indices") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    seen.insert(derive_seed(7, "select", i));
    seen.insert(derive_seed(7, "sample", i));
  }
  CHECK(seen.size() == 2000);
  CHECK(derive_seed(7, "x", 3) == derive_seed(7, "x", 3));
  CHECK(derive_seed(7, "x", 3) != derive_seed(8, "x", 3));
}

TEST_CASE("uniform draws stay in range and are balanced") {
  Rng rng(1);
  std::vector<int> bins(10, 0);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    ++bins[rng.below(10)];
  }
  for (int b : bins) CHECK(std::abs(b - 10000) < 400);
  CHECK_THROWS(rng.below(0));
}

TEST_CASE("normal draws have the requested moments") {
  Rng rng(99);
  const int n = 100000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal(10.0, 2.0);
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  CHECK(mean == doctest::Approx(10.0).epsilon(0.005));
  CHECK(std::sqrt(var) == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("sampling without replacement yields distinct indices") {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    const std::size_t k = rng.below(n + 1);
    const auto v = sample_without_replacement(n, k, rng);
    CHECK(v.size() == k);
    std::set<std::size_t> s(v.begin(), v.end());
    CHECK(s.size() == k);
    for (auto x : v) CHECK(x < n);
  }
  CHECK_THROWS(sample_without_replacement(3, 4, rng));
}

TEST_CASE("same seed, same sequence") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
}

#include <cmath>
#include <cstdint>
#include <vector>

#include "causalpanel/rng.hpp"
#include "doctest.h"

using namespace causalpanel;

TEST_CASE("splitmix64 reference vector") {
  std::uint64_t state = 0;
  CHECK(splitmix64(state) == UINT64_C(0xE220A8397B1DCDAF));
}

TEST_CASE("streams are deterministic and index-separated") {
  RandomStream a(42), b(42);
  for (int i = 0; i < 200; ++i) CHECK(a.next_u64() == b.next_u64());

  RandomStream s0 = RandomStream::for_index(42, 0);
  RandomStream s1 = RandomStream::for_index(42, 1);
  RandomStream s0_again = RandomStream::for_index(42, 0);
  bool any_diff = false;
  for (int i = 0; i < 16; ++i) {
    const std::uint64_t x = s0.next_u64();
    CHECK(x == s0_again.next_u64());
    if (x != s1.next_u64()) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("uniform draws live in [0,1) with the right mean") {
  RandomStream rng(7);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.next_uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("open-interval uniform never returns 0") {
  RandomStream rng(11);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.next_uniform_open();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("normal draws match the first two moments") {
  RandomStream rng(3);
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.next_normal();
    sum += z;
    sumsq += z * z;
  }
  const double m = sum / n;
  CHECK(std::abs(m) < 0.02);
  CHECK(sumsq / n - m * m == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("bounded draws are in range and roughly uniform") {
  RandomStream rng(5);
  std::vector<int> counts(10, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t k = rng.next_below(10);
    REQUIRE(k < 10);
    ++counts[static_cast<std::size_t>(k)];
  }
  for (int c : counts) {
    CHECK(c == doctest::Approx(n / 10.0).epsilon(0.05));
  }
}

TEST_CASE("bernoulli respects degenerate probabilities") {
  RandomStream rng(9);
  for (int i = 0; i < 1000; ++i) {
    CHECK_FALSE(rng.next_bernoulli(0.0));
    CHECK(rng.next_bernoulli(1.0));
  }
  // p = 0.25 hits the right rate.
  int hits = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) hits += rng.next_bernoulli(0.25) ? 1 : 0;
  CHECK(static_cast<double>(hits) / n == doctest::Approx(0.25).epsilon(0.02));
}

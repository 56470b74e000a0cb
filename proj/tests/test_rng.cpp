#include <doctest.h>

#include <set>
#include <vector>

#include "srouda/rng.hpp"

using namespace srouda;

TEST_CASE("same (seed, stream, draw index) reproduces values") {
  Rng a(42, "data");
  Rng b(42, "data");
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  Rng c(42, "data");
  Rng d(42, "data");
  for (int i = 0; i < 100; ++i) {
    CHECK(c.uniform() == d.uniform());
    CHECK(c.normal() == d.normal());
  }
}

TEST_CASE("different streams and seeds decorrelate") {
  Rng a(42, "data");
  Rng b(42, "attack");
  Rng c(43, "data");
  int equal_ab = 0, equal_ac = 0;
  for (int i = 0; i < 64; ++i) {
    const auto x = a.next_u64();
    if (x == b.next_u64()) ++equal_ab;
    if (x == c.next_u64()) ++equal_ac;
  }
  CHECK(equal_ab == 0);
  CHECK(equal_ac == 0);
}

TEST_CASE("substreams derive from identity, not consumed state") {
  Rng a(7, "root");
  (void)a.next_u64();
  (void)a.next_u64();
  Rng b(7, "root");
  CHECK(a.substream("x").next_u64() == b.substream("x").next_u64());
}

TEST_CASE("uniform lies in [0,1) and uniform_index in range") {
  Rng r(1, "test");
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 10000; ++i) {
    CHECK(r.uniform_index(7) < 7);
  }
  CHECK_THROWS(r.uniform_index(0));
}

TEST_CASE("uniform_index is roughly uniform") {
  Rng r(3, "test");
  std::vector<int> counts(5, 0);
  const int n = 50000;
  for (int i = 0; i < n; ++i) ++counts[r.uniform_index(5)];
  for (int c : counts) {
    CHECK(c > n / 5 - 600);  // ~6.7 sigma
    CHECK(c < n / 5 + 600);
  }
}

TEST_CASE("permutation is a permutation") {
  Rng r(9, "test");
  const auto p = r.permutation(100);
  std::set<std::size_t> seen(p.begin(), p.end());
  CHECK(seen.size() == 100);
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == 99);
}

TEST_CASE("sample_without_replacement yields distinct indices") {
  Rng r(11, "test");
  for (int rep = 0; rep < 100; ++rep) {
    const auto s = r.sample_without_replacement(16, 4);
    CHECK(s.size() == 4);
    std::set<std::size_t> seen(s.begin(), s.end());
    CHECK(seen.size() == 4);
    for (auto i : seen) CHECK(i < 16);
  }
  CHECK_THROWS(r.sample_without_replacement(3, 4));
}

TEST_CASE("normal has plausible first moments") {
  Rng r(17, "test");
  double sum = 0.0, sum2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sum2 += x * x;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sum2 / n - 1.0) < 0.03);
}

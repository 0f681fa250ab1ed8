#include <doctest.h>

#include <set>

#include "tsforge/parallel.hpp"
#include "tsforge/rng.hpp"

using namespace tsforge;

TEST_CASE("derived streams are stable and key dependent") {
  CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
  Rng a(7, "k"), b(7, "k");
  for (int i = 0; i < 10; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("uniform, index and sampling ranges") {
  Rng r(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.index(7) < 7);
  }
  const auto s = r.sample_without_replacement(50, 20);
  CHECK(s.size() == 20);
  CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 20);
  for (auto x : s) CHECK(x < 50);
  CHECK_THROWS(r.sample_without_replacement(3, 4));
  CHECK_THROWS(r.index(0));
}

TEST_CASE("categorical follows its weights") {
  Rng r(5);
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 30000; ++i) ++counts[r.categorical({1.0, 0.0, 3.0})];
  CHECK(counts[1] == 0);
  CHECK(counts[0] == doctest::Approx(7500).epsilon(0.05));
  CHECK_THROWS(r.categorical({0.0, 0.0}));
  CHECK_THROWS(r.categorical({1.0, -1.0}));
}

TEST_CASE("parallel_for visits everything and rethrows") {
  std::vector<int> seen(1000, 0);
  parallel_for(seen.size(), 4, [&](std::size_t i) { seen[i] += 1; });
  for (int x : seen) CHECK(x == 1);
  CHECK_THROWS(parallel_for(100, 3, [](std::size_t i) {
    if (i == 57) throw std::runtime_error("boom");
  }));
}

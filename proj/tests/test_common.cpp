#include <doctest.h>

#include <atomic>
#include <cmath>
#include <set>
#include <vector>

#include "rvc/common.hpp"

using namespace rvc;

TEST_CASE("rng streams are reproducible and forks differ") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
  }
  const Rng base(7);
  Rng f1 = base.fork(1), f1b = base.fork(1), f2 = base.fork(2);
  const auto v = f1.next_u64();
  CHECK(v == f1b.next_u64());
  CHECK(v != f2.next_u64());
}

TEST_CASE("rng uniform, below and normal stay in range with sane moments") {
  Rng r(3);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.below(7) < 7u);
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("parallel_for covers every index exactly once at any worker count") {
  for (std::size_t threads : {1u, 2u, 4u, 7u}) {
    set_thread_count(threads);
    for (std::size_t n : {0u, 1u, 3u, 100u}) {
      std::vector<std::atomic<int>> hits(n);
      parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) hits[i]++;
      });
      for (auto& h : hits) CHECK(h.load() == 1);
    }
  }
  set_thread_count(0);
}

TEST_CASE("parallel_for rethrows worker exceptions") {
  set_thread_count(4);
  CHECK_THROWS_AS(parallel_for(16,
                               [](std::size_t b, std::size_t) {
                                 if (b > 0) throw DataError("boom");
                               }),
                  DataError);
  set_thread_count(0);
}

TEST_CASE("set_thread_count overrides and zero restores the default") {
  set_thread_count(5);
  CHECK(thread_count() == 5);
  set_thread_count(0);
  CHECK(thread_count() >= 1);
}

TEST_CASE("wrap_angle maps into [-pi, pi)") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(kPi) == doctest::Approx(-kPi));
  CHECK(wrap_angle(3 * kPi + 0.5) == doctest::Approx(-kPi + 0.5));
  CHECK(wrap_angle(-kPi) == doctest::Approx(-kPi));
  for (double a = -20; a < 20; a += 0.37) {
    const double w = wrap_angle(a);
    CHECK(w >= -kPi);
    CHECK(w < kPi);
    CHECK(std::abs(std::remainder(w - a, 2 * kPi)) < 1e-9);
  }
}

#include <doctest.h>

#include <cmath>
#include <set>
#include <thread>
#include <vector>

#include "signvr/errors.hpp"
#include "signvr/rng.hpp"

using namespace signvr;

namespace {

std::vector<std::uint64_t> take(RngStream s, int n) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < n; ++i) out.push_back(s());
  return out;
}

}  // namespace

TEST_CASE("equal seed and stream id give equal sequences") {
  CHECK(take(RngStream(42, 7), 100) == take(RngStream(42, 7), 100));
  CHECK(take(RngStream(42, 7), 100) != take(RngStream(42, 8), 100));
  CHECK(take(RngStream(42, 7), 100) != take(RngStream(43, 7), 100));
}

TEST_CASE("fork does not depend on how far the parent has advanced") {
  RngStream a(1);
  RngStream b(1);
  for (int i = 0; i < 1000; ++i) b();
  CHECK(take(a.fork("node"), 50) == take(b.fork("node"), 50));
  CHECK(take(a.fork(3), 50) == take(b.fork(3), 50));
  CHECK(take(a.fork("x").fork(1), 50) != take(a.fork("x").fork(2), 50));
  CHECK(a.fork("x").stream_id() != a.fork("y").stream_id());
}

TEST_CASE("streams are reproducible across threads") {
  const RngStream root(99);
  std::vector<std::vector<std::uint64_t>> threaded(8), serial(8);
  {
    std::vector<std::jthread> pool;
    for (std::uint64_t j = 0; j < 8; ++j) {
      pool.emplace_back([&, j] { threaded[j] = take(root.fork(j), 1000); });
    }
  }
  for (std::uint64_t j = 0; j < 8; ++j) serial[j] = take(root.fork(j), 1000);
  CHECK(threaded == serial);
}

TEST_CASE("uniform lies in [0, 1) and has the right mean") {
  RngStream rng(5);
  double sum = 0.0;
  constexpr int N = 100000;
  for (int i = 0; i < N; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / N - 0.5) <= 4.0 * std::sqrt(1.0 / 12.0 / N));
}

TEST_CASE("uniform_index covers the range without bias") {
  RngStream rng(6);
  CHECK_THROWS_AS(rng.uniform_index(0), InvalidInput);
  CHECK(rng.uniform_index(1) == 0);
  constexpr int N = 70000;
  std::vector<int> counts(7, 0);
  for (int i = 0; i < N; ++i) ++counts[rng.uniform_index(7)];
  const double p = 1.0 / 7.0;
  for (int c : counts) {
    CHECK(std::abs(c / static_cast<double>(N) - p) <= 4.0 * std::sqrt(p * (1 - p) / N));
  }
}

TEST_CASE("normal has mean 0 and variance 1") {
  RngStream rng(8);
  constexpr int N = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < N; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / N) <= 4.0 / std::sqrt(N));
  // Var of z^2 is 2.
  CHECK(std::abs(s2 / N - 1.0) <= 4.0 * std::sqrt(2.0 / N));
}

TEST_CASE("fnv1a64 and mix64 are fixed functions") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(mix64(0) == 0xe220a8397b1dcdafull);
}

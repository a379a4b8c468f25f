#include <doctest.h>

#include <cmath>
#include <limits>

#include "signvr/errors.hpp"
#include "signvr/sign_ops.hpp"
#include "signvr/vector.hpp"

using namespace signvr;

TEST_CASE("dense vector rejects non-finite input and empty dimension") {
  CHECK_THROWS_AS(DenseVector(std::vector<double>{1.0, std::nan("")}), InvalidInput);
  CHECK_THROWS_AS(DenseVector({std::numeric_limits<double>::infinity()}), InvalidInput);
  CHECK_THROWS_AS(DenseVector(std::vector<double>{}), InvalidInput);
  CHECK_THROWS_AS(DenseVector(0), InvalidInput);
  CHECK_THROWS_AS(DenseVector({1.0}) + DenseVector({1.0, 2.0}), InvalidInput);
}

TEST_CASE("sign") {
  CHECK(sign(DenseVector{2.5, -0.1, 0.0}) == SignVector{1, -1, 0});
  CHECK(sign(DenseVector{1.0, 3.0, 1e-300}) == SignVector{1, 1, 1});
  CHECK(sign(DenseVector{-3.0}) == SignVector{-1});
  DenseVector bad{1.0};
  bad[0] = std::nan("");
  CHECK_THROWS_AS(sign(bad), InvalidInput);
}

TEST_CASE("sign_bit sends zero to +1") {
  CHECK(sign_bit(DenseVector{0.0, -0.5}).to_signs() == SignVector{1, -1});
  CHECK(sign_bit(DenseVector{1e-300}).to_signs() == SignVector{1});
  CHECK(sign_bit(DenseVector{-0.0}).to_signs() == SignVector{1});
}

TEST_CASE("sign and sign_bit agree away from zero") {
  RngStream rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    DenseVector v(1 + rng.uniform_index(40));
    for (double& x : v) x = rng.bernoulli(0.2) ? 0.0 : rng.normal();
    const SignVector s = sign(v);
    const SignVector b = sign_bit(v).to_signs();
    for (std::size_t k = 0; k < v.dim(); ++k) {
      if (v[k] != 0.0) CHECK(s[k] == b[k]);
    }
  }
}

TEST_CASE("bit sign codec round-trips every length 1..257") {
  RngStream rng(3);
  for (std::size_t d = 1; d <= 257; ++d) {
    std::vector<std::int8_t> signs(d);
    for (auto& s : signs) s = rng.bernoulli(0.5) ? 1 : -1;
    const BitSignVector packed = BitSignVector::from_signs(signs);
    REQUIRE(packed.bytes().size() == (d + 7) / 8);
    // Pad bits are zero.
    if (d % 8 != 0) CHECK((packed.bytes().back() >> (d % 8)) == 0);
    const std::vector<std::uint8_t> raw(packed.bytes().begin(), packed.bytes().end());
    const BitSignVector decoded = BitSignVector::from_bytes(d, raw);
    CHECK(decoded == packed);
    CHECK(decoded.to_signs() == SignVector(signs));
  }
}

TEST_CASE("bit layout is least significant bit first") {
  const BitSignVector b = BitSignVector::from_signs(SignVector{1, -1, 1});
  REQUIRE(b.bytes().size() == 1);
  CHECK(b.bytes()[0] == 0b101);
  const BitSignVector nine = BitSignVector::from_signs(SignVector{-1, -1, -1, -1, -1, -1, -1, -1, 1});
  CHECK(nine.bytes()[0] == 0);
  CHECK(nine.bytes()[1] == 1);
}

TEST_CASE("from_bytes validates length and pad bits") {
  CHECK_THROWS_AS(BitSignVector::from_bytes(9, {0x00}), InvalidInput);
  CHECK_THROWS_AS(BitSignVector::from_bytes(3, {0x00, 0x00}), InvalidInput);
  CHECK_THROWS_AS(BitSignVector::from_bytes(3, {0b1000}), InvalidInput);
  CHECK_NOTHROW(BitSignVector::from_bytes(3, {0b111}));
  CHECK_THROWS_AS(BitSignVector::from_signs(SignVector{1, 0}), InvalidInput);
}

TEST_CASE("stochastic sign: boundaries and domain") {
  RngStream rng(5);
  const DenseVector edge{2.0, -2.0};
  for (int i = 0; i < 1000; ++i) {
    CHECK(stochastic_sign(edge, 2.0, rng).to_signs() == SignVector{1, -1});
  }
  CHECK_THROWS_AS(stochastic_sign(DenseVector{2.0 + 1e-12}, 2.0, rng), DomainViolation);
  CHECK_THROWS_AS(stochastic_sign(DenseVector{0.1}, 0.0, rng), InvalidInput);
}

TEST_CASE("stochastic sign of zero is a fair coin") {
  RngStream rng(17);
  constexpr int N = 200000;
  const DenseVector zero = DenseVector::zeros(4);
  std::vector<double> sums(4, 0.0);
  for (int i = 0; i < N; ++i) {
    const BitSignVector s = stochastic_sign(zero, 1.0, rng);
    for (std::size_t k = 0; k < 4; ++k) sums[k] += s.get(k);
  }
  for (double s : sums) CHECK(std::abs(s / N) <= 0.01);
}

TEST_CASE("stochastic sign is unbiased for v / R") {
  RngStream rng(23);
  constexpr int N = 200000;
  const DenseVector v{0.5, -0.25};
  std::vector<double> sums(2, 0.0);
  for (int i = 0; i < N; ++i) {
    const BitSignVector s = stochastic_sign(v, 1.0, rng);
    for (std::size_t k = 0; k < 2; ++k) sums[k] += s.get(k);
  }
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(std::abs(sums[k] / N - v[k]) <= 4.0 * std::sqrt((1.0 - v[k] * v[k]) / N));
  }
}

TEST_CASE("stochastic sign consumes one draw per coordinate") {
  RngStream a(9), b(9);
  stochastic_sign(DenseVector{1.0, -1.0, 0.0}, 1.0, a);
  for (int i = 0; i < 3; ++i) b.uniform();
  CHECK(a() == b());
}

TEST_CASE("project_l2") {
  const DenseVector inside{0.3, 0.4};  // norm 0.5
  CHECK(project_l2(inside, 1.0) == inside);
  const DenseVector p = project_l2(DenseVector{3.0, 4.0}, 1.0);
  CHECK(p[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(norm_l2(p) <= 1.0);
}

TEST_CASE("project_l2 output stays in the ball and is the closest feasible point") {
  RngStream rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + rng.uniform_index(8);
    DenseVector v(d);
    for (double& x : v) x = 5.0 * rng.normal();
    const double G = 0.1 + 3.0 * rng.uniform();
    const DenseVector p = project_l2(v, G);
    CHECK(norm_l2(p) <= G);
    CHECK(norm_linf(p) <= G);
    const double dist = std::sqrt(squared_distance(p, v));
    for (int k = 0; k < 1000; ++k) {
      DenseVector w(d);
      for (double& x : w) x = rng.normal();
      w = project_l2(w, G * rng.uniform() + 1e-9);
      CHECK(dist <= std::sqrt(squared_distance(w, v)) + 1e-12);
    }
  }
}

TEST_CASE("norms") {
  const DenseVector v{3.0, -4.0};
  CHECK(norm_l1(v) == 7.0);
  CHECK(norm_l2(v) == 5.0);
  CHECK(norm_linf(v) == 4.0);
  const DenseVector z = DenseVector::zeros(5);
  CHECK(norm_l1(z) == 0.0);
  CHECK(norm_l2(z) == 0.0);
  CHECK(norm_linf(z) == 0.0);
  // No overflow for huge entries.
  CHECK(norm_l2(DenseVector{3e200, 4e200}) == doctest::Approx(5e200));
}

TEST_CASE("norm ordering l2 <= l1 <= sqrt(d) l2") {
  RngStream rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    DenseVector v(100);
    for (double& x : v) x = rng.normal();
    const double l1 = norm_l1(v), l2 = norm_l2(v);
    CHECK(l2 <= l1);
    CHECK(l1 <= 10.0 * l2 * (1.0 + 1e-15));
  }
}

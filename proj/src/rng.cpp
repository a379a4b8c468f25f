// SPDX-License-Identifier: Apache-2.0

#include "signvr/rng.hpp"

#include <cmath>
#include <numbers>

#include "signvr/errors.hpp"

namespace signvr {

namespace {

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream_id) {
  return mix64(mix64(seed) ^ (stream_id * 0xd1342543de82ef95ull + 1));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(stream_key(seed, stream_id)) {}

RngStream RngStream::fork(std::uint64_t label) const {
  return RngStream(seed_, mix64(stream_id_ ^ mix64(label + 0x632be59bd9b4e019ull)));
}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

__extension__ typedef unsigned __int128 u128;

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  if (n == 0) throw InvalidInput("uniform_index: n must be positive");
  // Lemire's multiply-shift rejection.
  std::uint64_t x = engine_();
  u128 m = static_cast<u128>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = engine_();
      m = static_cast<u128>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

}  // namespace signvr

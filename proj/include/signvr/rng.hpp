// SPDX-License-Identifier: Apache-2.0
//
// Deterministic, splittable random streams.
//
// A stream is identified by (seed, stream id). The id of a child stream is
// derived from the parent id and a label only, so forking never depends on
// how many values the parent has already produced. That is what makes node
// streams in the majority-vote simulator independent of execution order.

#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace signvr {

/// SplitMix64 finalizer; used for key derivation only.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// 64-bit FNV-1a, for turning purpose tags into stream ids.
constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

class RngStream {
public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Child stream keyed by (this id, label). Does not consume parent draws.
  RngStream fork(std::uint64_t label) const;
  RngStream fork(std::string_view label) const { return fork(fnv1a64(label)); }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n), unbiased. n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  /// Standard normal via Box-Muller; bit-reproducible across platforms,
  /// unlike std::normal_distribution.
  double normal();

private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace signvr

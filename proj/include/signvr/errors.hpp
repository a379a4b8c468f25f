// SPDX-License-Identifier: Apache-2.0
//
// Exception hierarchy shared by every signvr module.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace signvr {

/// Malformed argument: non-finite entry, dimension mismatch, bad parameter.
class InvalidInput : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// An operation was called outside the region where it is defined, e.g. a
/// stochastic sign whose probabilities would leave [0, 1].
class DomainViolation : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Violation of the majority-vote protocol. Carries the round and node where
/// it happened; `node` is kServerNode for server-side failures.
class ProtocolError : public std::runtime_error {
public:
  static constexpr std::uint32_t kServerNode = 0xFFFFFFFFu;

  ProtocolError(const std::string& what, std::uint64_t round, std::uint32_t node)
      : std::runtime_error(what), round_(round), node_(node) {}

  std::uint64_t round() const noexcept { return round_; }
  std::uint32_t node() const noexcept { return node_; }

private:
  std::uint64_t round_;
  std::uint32_t node_;
};

/// An iterate left the finite range the divergence guard allows.
class DivergenceError : public std::runtime_error {
public:
  DivergenceError(const std::string& what, std::uint64_t iteration)
      : std::runtime_error(what), iteration_(iteration) {}

  std::uint64_t iteration() const noexcept { return iteration_; }

private:
  std::uint64_t iteration_;
};

/// Unresolvable or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace signvr

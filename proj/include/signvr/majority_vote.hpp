// SPDX-License-Identifier: Apache-2.0
//
// Parameter-server simulation of sign-based majority vote with per-node
// recursive-momentum estimators.
//
// Option 1: workers send S_R(v^j) with R = 4G, the server broadcasts
//           Sign(mean of votes).
// Option 2: workers send S_G(P_G(v^j)) where P_G projects onto the l2 ball
//           of radius G, the server broadcasts S_1(mean of votes).
// Baseline: workers send sign(v^j), the server broadcasts Sign(mean).
//
// Messages travel as wire bytes through an in-process transport, so the
// communication ledger counts exactly what a socket would carry.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "signvr/metrics.hpp"
#include "signvr/oracles.hpp"
#include "signvr/optimizers.hpp"
#include "signvr/rng.hpp"
#include "signvr/vector.hpp"

namespace signvr {

/// How the Option-1 server resolves an exactly tied vote.
enum class TieMode {
  ternary,   ///< broadcast 0 for the coordinate; 2 bits per coordinate downlink
  plus_one,  ///< broadcast +1; keeps the downlink at 1 bit per coordinate
};

TieMode parse_tie_mode(const std::string& name);
std::string to_string(TieMode mode);

enum class ServerRule {
  majority_sign,      ///< Sign(mean), Option 1 and the baseline
  stochastic_unit,    ///< S_1(mean), Option 2
};

struct MvConfig {
  int option = 2;  ///< 1 or 2
  std::size_t n = 1;
  std::uint64_t T = 0;
  double eta = 1e-3;
  double beta = 0.5;
  double G = 1.0;
  TieMode tie_mode = TieMode::ternary;
  std::uint64_t seed = 0;
  std::uint64_t metrics_every = 1;
  /// Threads used for the per-node phase of each round. Results do not
  /// depend on this value.
  unsigned workers = 1;

  void validate() const;
  /// S_R radius used by Option-1 workers.
  double option1_radius() const noexcept { return 4.0 * G; }
};

struct NodeState {
  std::uint32_t node_id = 0;
  const StochasticGradOracle* oracle = nullptr;
  DenseVector v;  ///< v_t^j
  DenseVector x;  ///< x_t, the point v_t^j was formed at
  RngStream sample_rng{0};
  RngStream encode_rng{0};
  std::uint64_t t = 0;
};

/// Node j's state after round 1: v_1^j = grad f_j(x_1; xi_1^j).
NodeState init_node(std::uint32_t node_id, const StochasticGradOracle& oracle,
                    const DenseVector& x1, const RngStream& run_root);

/// Advances node j to x_new with one fresh sample evaluated at both x_new
/// and the previous point.
void node_step(NodeState& state, const DenseVector& x_new, double beta);

struct WorkerMessage {
  std::uint64_t round = 0;
  std::uint32_t node_id = 0;
  BitSignVector payload;

  friend bool operator==(const WorkerMessage&, const WorkerMessage&) = default;
};

enum class BroadcastEncoding {
  one_bit,  ///< sign plane only; direction must be strictly +-1
  ternary,  ///< sign plane followed by a nonzero-mask plane
};

struct ServerBroadcast {
  std::uint64_t round = 0;
  SignVector direction;
  BroadcastEncoding encoding = BroadcastEncoding::one_bit;

  friend bool operator==(const ServerBroadcast&, const ServerBroadcast&) = default;
};

/// Option 1 worker: S_R(v) with R = 4G. Throws ProtocolError carrying the
/// offending norm if ||v||_inf > 4G.
WorkerMessage worker_encode_option1(const NodeState& state, std::uint64_t round, double G,
                                    RngStream& rng);

/// Option 2 worker: S_G(P_G(v)). Always valid since ||P_G(v)||_inf <= G.
WorkerMessage worker_encode_option2(const NodeState& state, std::uint64_t round, double G,
                                    RngStream& rng);

/// Baseline worker: deterministic sign with ties to +1.
WorkerMessage worker_encode_sign(const NodeState& state, std::uint64_t round);

/// Aggregates one complete round. Requires exactly one message from every
/// node 0..n-1 for the same round and dimension; otherwise ProtocolError.
/// The rng is consumed only by the stochastic_unit rule.
ServerBroadcast server_aggregate(std::span<const WorkerMessage> messages, std::size_t n,
                                 ServerRule rule, TieMode tie_mode, RngStream& rng);

/// Convenience overload selecting the rule from the Algorithm option (1 or 2).
ServerBroadcast server_aggregate(std::span<const WorkerMessage> messages, std::size_t n,
                                 int option, TieMode tie_mode, RngStream& rng);

// ---------------------------------------------------------------------------
// Wire format, all integers little-endian:
//   u64 round | u32 node_id | u32 dim | payload
// Worker payload: ceil(d/8) bytes of packed signs.
// Broadcast: node_id = 0xFFFFFFFF; payload is the sign plane, followed by a
// nonzero-mask plane for the ternary encoding.

inline constexpr std::size_t kHeaderBytes = 16;
inline constexpr std::uint32_t kBroadcastNodeId = 0xFFFFFFFFu;

std::vector<std::uint8_t> encode_message(const WorkerMessage& message);
WorkerMessage decode_worker_message(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_message(const ServerBroadcast& broadcast);
ServerBroadcast decode_server_broadcast(std::span<const std::uint8_t> bytes);

/// Payload bytes of a broadcast of dimension d under an encoding.
std::size_t broadcast_payload_bytes(std::size_t d, BroadcastEncoding encoding) noexcept;

// ---------------------------------------------------------------------------

/// Runs the protocol for cfg.T rounds from x1 (partition start by default).
RunResult mv_run(const NodePartition& partition, const MvConfig& cfg,
                 std::optional<DenseVector> x1 = std::nullopt);

/// Majority vote with deterministic signs at both stages,
/// x_{t+1} = x_t - eta Sign(mean_j sign(v_t^j)). cfg.option is ignored.
RunResult baseline_mv_run(const NodePartition& partition, const MvConfig& cfg,
                          std::optional<DenseVector> x1 = std::nullopt);

/// "theorem3": option 1, beta = 1/2, eta = c / (T^{1/2} d^{1/2}), R = 4G.
/// "theorem4": option 2, beta = c T^{-1/2}, eta = c / (d^{1/2} T^{1/2}).
MvConfig preset_mv(const std::string& theorem, std::uint64_t T, std::size_t d, std::size_t n,
                   double G, ScaleConstants scale = {});

}  // namespace signvr

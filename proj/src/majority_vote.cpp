// SPDX-License-Identifier: Apache-2.0

#include "signvr/majority_vote.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <string>
#include <thread>

#include "signvr/errors.hpp"
#include "signvr/sign_ops.hpp"

namespace signvr {

TieMode parse_tie_mode(const std::string& name) {
  if (name == "ternary") return TieMode::ternary;
  if (name == "plus_one") return TieMode::plus_one;
  throw ConfigError("unknown tie_mode '" + name + "' (expected ternary or plus_one)");
}

std::string to_string(TieMode mode) {
  return mode == TieMode::ternary ? "ternary" : "plus_one";
}

void MvConfig::validate() const {
  if (option != 1 && option != 2) throw ConfigError("majority vote: option must be 1 or 2");
  if (n < 1) throw ConfigError("majority vote: need at least one node");
  if (n >= kBroadcastNodeId) throw ConfigError("majority vote: too many nodes");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("majority vote: eta must be > 0");
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("majority vote: beta must lie in (0, 1]");
  if (!(G > 0.0) || !std::isfinite(G)) throw ConfigError("majority vote: G must be positive and finite");
  if (metrics_every < 1) throw ConfigError("majority vote: metrics_every must be >= 1");
  if (workers < 1) throw ConfigError("majority vote: workers must be >= 1");
}

NodeState init_node(std::uint32_t node_id, const StochasticGradOracle& oracle,
                    const DenseVector& x1, const RngStream& run_root) {
  const RngStream node_root = run_root.fork("node").fork(node_id);
  NodeState state;
  state.node_id = node_id;
  state.oracle = &oracle;
  state.sample_rng = node_root.fork("samples");
  state.encode_rng = node_root.fork("encode");
  state.x = x1;
  state.v = oracle.grad(x1, oracle.draw(state.sample_rng));
  state.t = 1;
  return state;
}

void node_step(NodeState& state, const DenseVector& x_new, double beta) {
  if (state.oracle == nullptr) throw InvalidInput("node_step: node has no oracle");
  require_same_dim(state.x, x_new, "node_step");
  if (!(beta > 0.0 && beta <= 1.0)) throw InvalidInput("node_step: beta must lie in (0, 1]");
  const Sample xi = state.oracle->draw(state.sample_rng);
  DenseVector v = state.oracle->grad(x_new, xi);
  v.axpy(1.0 - beta, state.v - state.oracle->grad(state.x, xi));
  state.v = std::move(v);
  state.x = x_new;
  ++state.t;
}

WorkerMessage worker_encode_option1(const NodeState& state, std::uint64_t round, double G,
                                    RngStream& rng) {
  const double radius = 4.0 * G;
  const double norm = norm_linf(state.v);
  if (!(norm <= radius)) {
    throw ProtocolError("node " + std::to_string(state.node_id) + " round " +
                            std::to_string(round) + ": ||v||_inf = " + std::to_string(norm) +
                            " exceeds R = 4G = " + std::to_string(radius) +
                            " (gradient bound G or beta inconsistent)",
                        round, state.node_id);
  }
  return WorkerMessage{round, state.node_id, stochastic_sign(state.v, radius, rng)};
}

WorkerMessage worker_encode_option2(const NodeState& state, std::uint64_t round, double G,
                                    RngStream& rng) {
  const DenseVector projected = project_l2(state.v, G);
  return WorkerMessage{round, state.node_id, stochastic_sign(projected, G, rng)};
}

WorkerMessage worker_encode_sign(const NodeState& state, std::uint64_t round) {
  return WorkerMessage{round, state.node_id, sign_bit(state.v)};
}

ServerBroadcast server_aggregate(std::span<const WorkerMessage> messages, std::size_t n,
                                 ServerRule rule, TieMode tie_mode, RngStream& rng) {
  if (n == 0) throw InvalidInput("server_aggregate: n must be >= 1");
  const std::uint64_t round = messages.empty() ? 0 : messages.front().round;
  if (messages.size() != n) {
    throw ProtocolError("server expected " + std::to_string(n) + " messages in round " +
                            std::to_string(round) + ", got " + std::to_string(messages.size()),
                        round, ProtocolError::kServerNode);
  }
  const std::size_t d = messages.front().payload.dim();
  std::vector<const WorkerMessage*> by_node(n, nullptr);
  for (const auto& msg : messages) {
    if (msg.round != round) {
      throw ProtocolError("message from node " + std::to_string(msg.node_id) +
                              " belongs to round " + std::to_string(msg.round),
                          round, msg.node_id);
    }
    if (msg.node_id >= n) {
      throw ProtocolError("unknown node id " + std::to_string(msg.node_id), round, msg.node_id);
    }
    if (by_node[msg.node_id] != nullptr) {
      throw ProtocolError("duplicate message from node " + std::to_string(msg.node_id), round,
                          msg.node_id);
    }
    if (msg.payload.dim() != d || d == 0) {
      throw ProtocolError("payload dimension mismatch from node " + std::to_string(msg.node_id),
                          round, msg.node_id);
    }
    by_node[msg.node_id] = &msg;
  }

  // Tally in node-id order so the result never depends on arrival order.
  std::vector<std::uint32_t> plus_votes(d, 0);
  for (const WorkerMessage* msg : by_node) {
    for (std::size_t k = 0; k < d; ++k) plus_votes[k] += msg->payload.is_plus(k) ? 1u : 0u;
  }
  const auto nn = static_cast<double>(n);

  ServerBroadcast out;
  out.round = round;
  if (rule == ServerRule::majority_sign) {
    std::vector<std::int8_t> dir(d);
    for (std::size_t k = 0; k < d; ++k) {
      const auto twice_plus = 2 * static_cast<std::int64_t>(plus_votes[k]);
      const auto total = static_cast<std::int64_t>(n);
      if (twice_plus > total) {
        dir[k] = 1;
      } else if (twice_plus < total) {
        dir[k] = -1;
      } else {
        dir[k] = tie_mode == TieMode::ternary ? 0 : 1;
      }
    }
    out.direction = SignVector(std::move(dir));
    out.encoding = tie_mode == TieMode::ternary ? BroadcastEncoding::ternary
                                                : BroadcastEncoding::one_bit;
  } else {
    // mean_k = (plus - minus) / n lies in [-1, 1] by construction, so S_1 is
    // always defined.
    DenseVector mean(d);
    for (std::size_t k = 0; k < d; ++k) {
      mean[k] = (2.0 * plus_votes[k] - nn) / nn;
    }
    out.direction = stochastic_sign(mean, 1.0, rng).to_signs();
    out.encoding = BroadcastEncoding::one_bit;
  }
  return out;
}

ServerBroadcast server_aggregate(std::span<const WorkerMessage> messages, std::size_t n,
                                 int option, TieMode tie_mode, RngStream& rng) {
  if (option == 1) return server_aggregate(messages, n, ServerRule::majority_sign, tie_mode, rng);
  if (option == 2) return server_aggregate(messages, n, ServerRule::stochastic_unit, tie_mode, rng);
  throw InvalidInput("server_aggregate: option must be 1 or 2");
}

// ---------------------------------------------------------------------------
// Wire format

namespace {

void put_le(std::vector<std::uint8_t>& out, std::uint64_t value, int bytes) {
  for (int b = 0; b < bytes; ++b) out.push_back(static_cast<std::uint8_t>(value >> (8 * b)));
}

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t offset, int bytes) {
  std::uint64_t value = 0;
  for (int b = 0; b < bytes; ++b) {
    value |= static_cast<std::uint64_t>(in[offset + b]) << (8 * b);
  }
  return value;
}

struct Header {
  std::uint64_t round;
  std::uint32_t node_id;
  std::uint32_t dim;
};

Header read_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw InvalidInput("wire message shorter than header");
  Header h{get_le(bytes, 0, 8), static_cast<std::uint32_t>(get_le(bytes, 8, 4)),
           static_cast<std::uint32_t>(get_le(bytes, 12, 4))};
  if (h.dim == 0) throw InvalidInput("wire message with zero dimension");
  return h;
}

void write_header(std::vector<std::uint8_t>& out, std::uint64_t round, std::uint32_t node_id,
                  std::size_t dim) {
  if (dim == 0 || dim > 0xFFFFFFFFu) throw InvalidInput("wire message dimension out of range");
  put_le(out, round, 8);
  put_le(out, node_id, 4);
  put_le(out, dim, 4);
}

}  // namespace

std::size_t broadcast_payload_bytes(std::size_t d, BroadcastEncoding encoding) noexcept {
  const std::size_t plane = BitSignVector::byte_length(d);
  return encoding == BroadcastEncoding::ternary ? 2 * plane : plane;
}

std::vector<std::uint8_t> encode_message(const WorkerMessage& message) {
  if (message.node_id == kBroadcastNodeId) throw InvalidInput("worker id collides with broadcast id");
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + message.payload.bytes().size());
  write_header(out, message.round, message.node_id, message.payload.dim());
  out.insert(out.end(), message.payload.bytes().begin(), message.payload.bytes().end());
  return out;
}

WorkerMessage decode_worker_message(std::span<const std::uint8_t> bytes) {
  const Header h = read_header(bytes);
  if (h.node_id == kBroadcastNodeId) throw InvalidInput("broadcast frame decoded as worker message");
  const std::size_t plane = BitSignVector::byte_length(h.dim);
  if (bytes.size() != kHeaderBytes + plane) throw InvalidInput("worker message length mismatch");
  std::vector<std::uint8_t> payload(bytes.begin() + kHeaderBytes, bytes.end());
  return WorkerMessage{h.round, h.node_id, BitSignVector::from_bytes(h.dim, std::move(payload))};
}

std::vector<std::uint8_t> encode_message(const ServerBroadcast& broadcast) {
  const std::size_t d = broadcast.direction.dim();
  const std::size_t plane = BitSignVector::byte_length(d);
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + broadcast_payload_bytes(d, broadcast.encoding));
  write_header(out, broadcast.round, kBroadcastNodeId, d);

  std::vector<std::uint8_t> signs(plane, 0);
  std::vector<std::uint8_t> mask(plane, 0);
  for (std::size_t k = 0; k < d; ++k) {
    const auto bit = static_cast<std::uint8_t>(1u << (k & 7));
    const std::int8_t s = broadcast.direction[k];
    if (s == 0 && broadcast.encoding == BroadcastEncoding::one_bit) {
      throw InvalidInput("one-bit broadcast cannot carry a zero direction");
    }
    if (s > 0) signs[k >> 3] |= bit;
    if (s != 0) mask[k >> 3] |= bit;
  }
  out.insert(out.end(), signs.begin(), signs.end());
  if (broadcast.encoding == BroadcastEncoding::ternary) out.insert(out.end(), mask.begin(), mask.end());
  return out;
}

ServerBroadcast decode_server_broadcast(std::span<const std::uint8_t> bytes) {
  const Header h = read_header(bytes);
  if (h.node_id != kBroadcastNodeId) throw InvalidInput("worker frame decoded as broadcast");
  const std::size_t plane = BitSignVector::byte_length(h.dim);
  const std::size_t payload = bytes.size() - kHeaderBytes;
  BroadcastEncoding encoding;
  if (payload == plane) {
    encoding = BroadcastEncoding::one_bit;
  } else if (payload == 2 * plane) {
    encoding = BroadcastEncoding::ternary;
  } else {
    throw InvalidInput("broadcast length matches neither encoding");
  }
  const BitSignVector signs = BitSignVector::from_bytes(
      h.dim, std::vector<std::uint8_t>(bytes.begin() + kHeaderBytes,
                                       bytes.begin() + kHeaderBytes + plane));
  std::vector<std::int8_t> dir(h.dim);
  if (encoding == BroadcastEncoding::one_bit) {
    for (std::size_t k = 0; k < h.dim; ++k) dir[k] = static_cast<std::int8_t>(signs.get(k));
  } else {
    const BitSignVector mask = BitSignVector::from_bytes(
        h.dim, std::vector<std::uint8_t>(bytes.begin() + kHeaderBytes + plane, bytes.end()));
    for (std::size_t k = 0; k < h.dim; ++k) {
      if (!mask.is_plus(k)) {
        if (signs.is_plus(k)) throw InvalidInput("ternary broadcast: sign bit set on a zero");
        dir[k] = 0;
      } else {
        dir[k] = static_cast<std::int8_t>(signs.get(k));
      }
    }
  }
  return ServerBroadcast{h.round, SignVector(std::move(dir)), encoding};
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

enum class WorkerRule { option1, option2, deterministic_sign };

void for_each_node(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t j = 0; j < n; ++j) body(j);
    return;
  }
  const std::size_t threads = std::min<std::size_t>(workers, n);
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t j = w; j < n; j += threads) body(j);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  // Report the failure of the lowest node range first, independent of timing.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

RunResult simulate(const NodePartition& partition, const MvConfig& cfg,
                   std::optional<DenseVector> x1, WorkerRule worker_rule, ServerRule server_rule,
                   const char* stream_tag) {
  cfg.validate();
  if (cfg.n != partition.num_nodes()) {
    throw ConfigError("majority vote: config has n = " + std::to_string(cfg.n) +
                      " but the partition has " + std::to_string(partition.num_nodes()) +
                      " nodes");
  }
  DenseVector x = x1 ? std::move(*x1) : partition.initial_point();
  if (x.dim() != partition.dim() || !x.all_finite()) {
    throw InvalidInput("majority vote: invalid initial point");
  }

  const RngStream root = RngStream(cfg.seed).fork(stream_tag);
  RngStream server_rng = root.fork("server");
  const std::size_t n = cfg.n;
  const std::size_t d = x.dim();

  RunResult result;
  result.ledger.emplace();
  MetricsRecorder recorder(cfg.metrics_every);
  if (cfg.T == 0) {
    result.x_out = x;
    result.x_final = x;
    recorder.finish(result);
    return result;
  }
  const std::uint64_t tau = 1 + root.fork("output").uniform_index(cfg.T);

  std::vector<NodeState> nodes(n);
  std::vector<std::vector<std::uint8_t>> uplink(n);
  std::vector<DenseVector> next_x(n);
  std::uint64_t bits_up = 0;
  std::uint64_t bits_down = 0;

  for (std::uint64_t t = 1; t <= cfg.T; ++t) {
    // Worker phase: estimator update and encoding, one independent task per node.
    for_each_node(n, cfg.workers, [&](std::size_t j) {
      const auto id = static_cast<std::uint32_t>(j);
      try {
        if (t == 1) {
          nodes[j] = init_node(id, partition.node_oracle(j), x, root);
        } else {
          node_step(nodes[j], x, cfg.beta);
        }
        WorkerMessage msg;
        switch (worker_rule) {
          case WorkerRule::option1:
            msg = worker_encode_option1(nodes[j], t, cfg.G, nodes[j].encode_rng);
            break;
          case WorkerRule::option2:
            msg = worker_encode_option2(nodes[j], t, cfg.G, nodes[j].encode_rng);
            break;
          case WorkerRule::deterministic_sign:
            msg = worker_encode_sign(nodes[j], t);
            break;
        }
        uplink[j] = encode_message(msg);
      } catch (const ProtocolError&) {
        throw;
      } catch (const std::exception& e) {
        throw ProtocolError("node " + std::to_string(j) + " round " + std::to_string(t) + ": " +
                                e.what(),
                            t, id);
      }
    });

    // Metrics at x_t, before the server acts.
    double max_v_linf = 0.0;
    double err_sum = 0.0;
    double err_linf = 0.0;
    for (const NodeState& node : nodes) {
      max_v_linf = std::max(max_v_linf, norm_linf(node.v));
      const DenseVector err = node.v - node.oracle->grad_true(x);
      const double e2 = norm_l2(err);
      err_sum += e2 * e2;
      err_linf = std::max(err_linf, norm_linf(err));
    }
    recorder.summary().max_node_estimator_linf =
        std::max(recorder.summary().max_node_estimator_linf, max_v_linf);
    recorder.summary().sample_grad_evals += (t == 1 ? 1 : 2) * n;

    // Server phase: decode every frame, aggregate, broadcast.
    RoundTraffic traffic;
    std::vector<WorkerMessage> inbox;
    inbox.reserve(n);
    for (const auto& frame : uplink) {
      traffic.uplink_framing += kHeaderBytes;
      traffic.uplink_payload += frame.size() - kHeaderBytes;
      inbox.push_back(decode_worker_message(frame));
    }
    const ServerBroadcast broadcast =
        server_aggregate(inbox, n, server_rule, cfg.tie_mode, server_rng);
    const std::vector<std::uint8_t> downlink = encode_message(broadcast);
    traffic.downlink_framing = kHeaderBytes;
    traffic.downlink_payload = downlink.size() - kHeaderBytes;
    result.ledger->record(traffic);
    bits_up += 8 * traffic.uplink_payload;
    bits_down += 8 * traffic.downlink_payload;

    const DenseVector truth = partition.global_grad_true(x);
    MetricsRow row;
    row.t = t;
    row.loss = partition.global_loss(x);
    row.grad_l1 = norm_l1(truth);
    row.grad_l2 = norm_l2(truth);
    row.est_err_sq = err_sum / static_cast<double>(n);
    row.bits_up = bits_up;
    row.bits_down = bits_down;
    row.envelope_ok = partition.in_envelope(x);
    recorder.observe(row, err_linf);
    if (t == tau) result.x_out = x;

    // Node phase: every node decodes the same frame and applies it locally.
    for_each_node(n, cfg.workers, [&](std::size_t j) {
      const ServerBroadcast received = decode_server_broadcast(downlink);
      DenseVector xn = nodes[j].x;
      for (std::size_t k = 0; k < d; ++k) xn[k] -= cfg.eta * received.direction[k];
      next_x[j] = std::move(xn);
    });
    for (std::size_t j = 1; j < n; ++j) {
      if (next_x[j] != next_x[0]) {
        throw ProtocolError("replication invariant broken: node " + std::to_string(j) +
                                " disagrees with node 0",
                            t, static_cast<std::uint32_t>(j));
      }
    }
    const DenseVector before = x;
    x = next_x[0];
    for (std::size_t k = 0; k < d; ++k) {
      if (!std::isfinite(x[k]) || std::abs(x[k]) > kDivergenceBound) {
        throw DivergenceError("majority vote iterate left the finite range at round " +
                                  std::to_string(t),
                              t);
      }
    }
    recorder.observe_step(before, x);
  }
  result.tau_out = tau;
  result.x_final = std::move(x);
  recorder.finish(result);
  return result;
}

}  // namespace

RunResult mv_run(const NodePartition& partition, const MvConfig& cfg,
                 std::optional<DenseVector> x1) {
  const bool opt1 = cfg.option == 1;
  return simulate(partition, cfg, std::move(x1),
                  opt1 ? WorkerRule::option1 : WorkerRule::option2,
                  opt1 ? ServerRule::majority_sign : ServerRule::stochastic_unit, "mv");
}

RunResult baseline_mv_run(const NodePartition& partition, const MvConfig& cfg,
                          std::optional<DenseVector> x1) {
  return simulate(partition, cfg, std::move(x1), WorkerRule::deterministic_sign,
                  ServerRule::majority_sign, "mv_baseline");
}

MvConfig preset_mv(const std::string& theorem, std::uint64_t T, std::size_t d, std::size_t n,
                   double G, ScaleConstants scale) {
  if (T < 1 || d < 1 || n < 1) throw ConfigError(theorem + ": T, d and n must be >= 1");
  if (!(scale.eta > 0.0) || !(scale.beta > 0.0)) throw ConfigError("scale constants must be positive");
  const double root_td = std::sqrt(static_cast<double>(T)) * std::sqrt(static_cast<double>(d));
  MvConfig cfg;
  cfg.T = T;
  cfg.n = n;
  cfg.G = G;
  if (theorem == "theorem3") {
    cfg.option = 1;
    cfg.beta = 0.5;
    cfg.eta = scale.eta / root_td;
  } else if (theorem == "theorem4") {
    cfg.option = 2;
    cfg.beta = scale.beta / std::sqrt(static_cast<double>(T));
    if (cfg.beta > 1.0) throw ConfigError("theorem4: preset beta exceeds 1");
    cfg.eta = scale.eta / root_td;
  } else {
    throw ConfigError("unknown majority-vote preset '" + theorem +
                      "' (expected theorem3 or theorem4)");
  }
  return cfg;
}

}  // namespace signvr

// SPDX-License-Identifier: Apache-2.0
//
// Per-iteration metrics and the run result shared by every algorithm.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "signvr/vector.hpp"

namespace signvr {

struct MetricsRow {
  std::uint64_t t = 0;
  double loss = 0.0;
  double grad_l1 = 0.0;      ///< ||grad f(x_t)||_1
  double grad_l2 = 0.0;      ///< ||grad f(x_t)||_2
  double est_err_sq = 0.0;   ///< ||v_t - grad f(x_t)||_2^2, mean over nodes in MV mode
  std::uint64_t bits_up = 0;    ///< cumulative payload bits, workers to server
  std::uint64_t bits_down = 0;  ///< cumulative payload bits, server broadcast
  bool envelope_ok = true;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

/// Byte counts for one round of the majority-vote protocol. Framing is the
/// fixed per-message header; payload is the packed sign data.
struct RoundTraffic {
  std::uint64_t uplink_payload = 0;
  std::uint64_t uplink_framing = 0;
  std::uint64_t downlink_payload = 0;
  std::uint64_t downlink_framing = 0;
};

class CommLedger {
public:
  void record(const RoundTraffic& round);

  const std::vector<RoundTraffic>& rounds() const noexcept { return rounds_; }
  bool empty() const noexcept { return rounds_.empty(); }
  const RoundTraffic& totals() const noexcept { return totals_; }

private:
  std::vector<RoundTraffic> rounds_;
  RoundTraffic totals_;
};

/// Whole-run aggregates over every iteration, independent of the row stride.
struct RunSummary {
  std::uint64_t iterations = 0;
  double avg_grad_l1 = 0.0;
  double avg_grad_l2 = 0.0;
  double avg_est_err_sq = 0.0;
  double max_est_err_linf = 0.0;   ///< max_t ||v_t - grad f(x_t)||_inf
  double max_step_linf = 0.0;      ///< max_t ||x_{t+1} - x_t||_inf
  double max_step_l2_sq = 0.0;     ///< max_t ||x_{t+1} - x_t||_2^2
  std::uint64_t sample_grad_evals = 0;
  std::uint64_t component_grad_evals = 0;
  std::uint64_t full_grad_evals = 0;
  std::uint64_t envelope_violations = 0;
  /// max over rounds and nodes of ||v_t^j||_inf (majority vote only).
  double max_node_estimator_linf = 0.0;
};

struct RunResult {
  std::vector<MetricsRow> rows;
  DenseVector x_out;        ///< iterate x_tau, tau uniform on {1..T}
  std::uint64_t tau_out = 0;
  DenseVector x_final;      ///< x_{T+1}
  RunSummary summary;
  std::optional<CommLedger> ledger;
};

/// Collects rows every `stride` iterations and running whole-run averages.
class MetricsRecorder {
public:
  explicit MetricsRecorder(std::uint64_t stride);

  /// Accumulate iteration t; keeps a row when t % stride == 0.
  void observe(const MetricsRow& row, double est_err_linf);
  void observe_step(const DenseVector& before, const DenseVector& after);

  RunSummary& summary() noexcept { return summary_; }
  /// Finalizes averages and moves the rows out.
  void finish(RunResult& result);

private:
  std::uint64_t stride_;
  std::vector<MetricsRow> rows_;
  RunSummary summary_;
  double sum_l1_ = 0.0;
  double sum_l2_ = 0.0;
  double sum_err_ = 0.0;
};

}  // namespace signvr

// SPDX-License-Identifier: Apache-2.0

#include "signvr/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "signvr/errors.hpp"

namespace signvr {

void CommLedger::record(const RoundTraffic& round) {
  rounds_.push_back(round);
  totals_.uplink_payload += round.uplink_payload;
  totals_.uplink_framing += round.uplink_framing;
  totals_.downlink_payload += round.downlink_payload;
  totals_.downlink_framing += round.downlink_framing;
}

MetricsRecorder::MetricsRecorder(std::uint64_t stride) : stride_(stride) {
  if (stride_ == 0) throw InvalidInput("metrics stride must be >= 1");
}

void MetricsRecorder::observe(const MetricsRow& row, double est_err_linf) {
  ++summary_.iterations;
  sum_l1_ += row.grad_l1;
  sum_l2_ += row.grad_l2;
  sum_err_ += row.est_err_sq;
  summary_.max_est_err_linf = std::max(summary_.max_est_err_linf, est_err_linf);
  if (!row.envelope_ok) ++summary_.envelope_violations;
  if (row.t % stride_ == 0) rows_.push_back(row);
}

void MetricsRecorder::observe_step(const DenseVector& before, const DenseVector& after) {
  double linf = 0.0;
  double l2_sq = 0.0;
  for (std::size_t k = 0; k < before.dim(); ++k) {
    const double d = after[k] - before[k];
    linf = std::max(linf, std::abs(d));
    l2_sq += d * d;
  }
  summary_.max_step_linf = std::max(summary_.max_step_linf, linf);
  summary_.max_step_l2_sq = std::max(summary_.max_step_l2_sq, l2_sq);
}

void MetricsRecorder::finish(RunResult& result) {
  if (summary_.iterations > 0) {
    const auto n = static_cast<double>(summary_.iterations);
    summary_.avg_grad_l1 = sum_l1_ / n;
    summary_.avg_grad_l2 = sum_l2_ / n;
    summary_.avg_est_err_sq = sum_err_ / n;
  }
  result.rows = std::move(rows_);
  result.summary = summary_;
}

}  // namespace signvr

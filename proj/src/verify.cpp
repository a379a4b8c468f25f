// SPDX-License-Identifier: Apache-2.0

#include "signvr/verify.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "signvr/errors.hpp"
#include "signvr/sign_ops.hpp"

namespace signvr::verify {

DenseVector finite_diff_grad(const std::function<double(const DenseVector&)>& loss,
                             const DenseVector& x, double h) {
  if (!(h > 0.0)) throw InvalidInput("finite_diff_grad: h must be > 0");
  DenseVector g(x.dim());
  DenseVector probe = x;
  for (std::size_t k = 0; k < x.dim(); ++k) {
    probe[k] = x[k] + h;
    const double up = loss(probe);
    probe[k] = x[k] - h;
    const double down = loss(probe);
    probe[k] = x[k];
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

VoteDistribution enumerate_vote_distribution(const std::vector<std::vector<double>>& vote_probs,
                                             int option, TieMode tie_mode) {
  const std::size_t n = vote_probs.size();
  if (n == 0) throw InvalidInput("enumerate_vote_distribution: need at least one node");
  if (n > kMaxEnumeratedNodes) {
    throw InvalidInput("enumerate_vote_distribution: n = " + std::to_string(n) +
                       " exceeds the enumeration limit of " +
                       std::to_string(kMaxEnumeratedNodes));
  }
  if (option != 1 && option != 2) throw InvalidInput("enumerate_vote_distribution: option 1 or 2");
  const std::size_t d = vote_probs.front().size();
  for (const auto& row : vote_probs) {
    if (row.size() != d) throw InvalidInput("enumerate_vote_distribution: ragged table");
    for (double p : row) {
      if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("enumerate_vote_distribution: p outside [0, 1]");
    }
  }

  VoteDistribution out;
  out.coordinates.resize(d);
  const std::uint32_t patterns = 1u << n;
  for (std::size_t k = 0; k < d; ++k) {
    CoordinateLaw law;
    for (std::uint32_t mask = 0; mask < patterns; ++mask) {
      // Bit j of mask set <=> node j voted +1.
      double weight = 1.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p = vote_probs[j][k];
        weight *= ((mask >> j) & 1u) ? p : 1.0 - p;
      }
      const int plus = std::popcount(mask);
      const int minus = static_cast<int>(n) - plus;
      if (option == 1) {
        if (plus > minus) {
          law.p_plus += weight;
        } else if (plus < minus) {
          law.p_minus += weight;
        } else if (tie_mode == TieMode::ternary) {
          law.p_zero += weight;
        } else {
          law.p_plus += weight;
        }
      } else {
        // S_1 of the vote mean (plus - minus)/n is +1 with probability plus/n.
        const double q = static_cast<double>(plus) / static_cast<double>(n);
        law.p_plus += weight * q;
        law.p_minus += weight * (1.0 - q);
      }
    }
    out.coordinates[k] = law;
  }
  return out;
}

DenseVector svrg_reference_estimator(const FiniteSumProblem& problem, const DenseVector& x_t,
                                     const DenseVector& snapshot_x, std::size_t i_t) {
  if (i_t >= problem.num_components()) {
    throw InvalidInput("svrg_reference_estimator: index out of range");
  }
  DenseVector estimate = problem.full_grad(snapshot_x);
  estimate += problem.component_grad(i_t, x_t);
  estimate -= problem.component_grad(i_t, snapshot_x);
  return estimate;
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 16;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

McEstimate mc_expectation(const std::function<DenseVector(RngStream&)>& sampler, std::size_t N,
                          RngStream& rng) {
  if (N < 2) throw InvalidInput("mc_expectation: N must be >= 2");
  std::vector<std::vector<double>> columns;
  for (std::size_t s = 0; s < N; ++s) {
    const DenseVector draw = sampler(rng);
    if (s == 0) columns.assign(draw.dim(), std::vector<double>(N));
    if (draw.dim() != columns.size()) throw InvalidInput("mc_expectation: sampler changed dimension");
    for (std::size_t k = 0; k < draw.dim(); ++k) columns[k][s] = draw[k];
  }
  const double nn = static_cast<double>(N);
  McEstimate est{DenseVector(columns.size()), DenseVector(columns.size())};
  std::vector<double> dev(N);
  for (std::size_t k = 0; k < columns.size(); ++k) {
    const double mean = pairwise_sum(columns[k]) / nn;
    for (std::size_t s = 0; s < N; ++s) {
      const double r = columns[k][s] - mean;
      dev[s] = r * r;
    }
    const double var = pairwise_sum(dev) / (nn - 1.0);
    est.mean[k] = mean;
    est.std_error[k] = std::sqrt(var / nn);
  }
  return est;
}

AgreementReport server_vs_enumeration(const std::vector<std::vector<double>>& vote_probs,
                                      int option, TieMode tie_mode, std::size_t rounds,
                                      RngStream& rng) {
  const VoteDistribution exact = enumerate_vote_distribution(vote_probs, option, tie_mode);
  const std::size_t n = vote_probs.size();
  const std::size_t d = vote_probs.front().size();

  // Votes with P(+1) = p are S_1 of the value 2p - 1.
  std::vector<DenseVector> vote_values;
  for (const auto& row : vote_probs) {
    DenseVector v(d);
    for (std::size_t k = 0; k < d; ++k) v[k] = 2.0 * row[k] - 1.0;
    vote_values.push_back(std::move(v));
  }
  RngStream server_rng = rng.fork("server");
  std::uint64_t round = 0;
  const auto sampler = [&](RngStream& r) {
    ++round;
    std::vector<WorkerMessage> inbox;
    for (std::size_t j = 0; j < n; ++j) {
      inbox.push_back(WorkerMessage{round, static_cast<std::uint32_t>(j),
                                    stochastic_sign(vote_values[j], 1.0, r)});
    }
    const ServerBroadcast b = server_aggregate(inbox, n, option, tie_mode, server_rng);
    DenseVector indicators(2 * d);
    for (std::size_t k = 0; k < d; ++k) {
      indicators[2 * k] = b.direction[k] == 1 ? 1.0 : 0.0;
      indicators[2 * k + 1] = b.direction[k] == 0 ? 1.0 : 0.0;
    }
    return indicators;
  };
  const McEstimate est = mc_expectation(sampler, rounds, rng);

  AgreementReport report;
  for (std::size_t k = 0; k < d; ++k) {
    const double want[2] = {exact.coordinates[k].p_plus, exact.coordinates[k].p_zero};
    for (std::size_t c = 0; c < 2; ++c) {
      const double diff = std::abs(est.mean[2 * k + c] - want[c]);
      const double se = est.std_error[2 * k + c];
      report.max_abs_diff = std::max(report.max_abs_diff, diff);
      if (diff == 0.0) continue;
      // A zero standard error with a nonzero gap means a probability-0 or -1
      // event disagreed outright.
      const double z = se > 0.0 ? diff / se : std::numeric_limits<double>::infinity();
      report.max_z = std::max(report.max_z, z);
    }
  }
  return report;
}

}  // namespace signvr::verify

// SPDX-License-Identifier: Apache-2.0
//
// Brute-force reference oracles. None of these share code with the modules
// they check: the estimators, vote rules and gradients are re-derived here
// from their definitions.

#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "signvr/majority_vote.hpp"
#include "signvr/oracles.hpp"
#include "signvr/rng.hpp"
#include "signvr/vector.hpp"

namespace signvr::verify {

/// Central differences (f(x + h e_k) - f(x - h e_k)) / 2h.
DenseVector finite_diff_grad(const std::function<double(const DenseVector&)>& loss,
                             const DenseVector& x, double h);

/// Exact law of the server output for one coordinate.
struct CoordinateLaw {
  double p_minus = 0.0;
  double p_zero = 0.0;
  double p_plus = 0.0;

  double mean() const noexcept { return p_plus - p_minus; }
};

struct VoteDistribution {
  std::vector<CoordinateLaw> coordinates;
};

/// Enumerates all 2^n vote patterns of every coordinate.
/// `vote_probs[j][k]` is P(node j votes +1 on coordinate k).
/// option 1 applies Sign with the given tie handling; option 2 applies S_1,
/// whose conditional law given a pattern with p plus votes is P(+1) = p/n.
VoteDistribution enumerate_vote_distribution(const std::vector<std::vector<double>>& vote_probs,
                                             int option, TieMode tie_mode);

inline constexpr std::size_t kMaxEnumeratedNodes = 20;

/// g_i(x_t) - g_i(x_s) + grad f(x_s).
DenseVector svrg_reference_estimator(const FiniteSumProblem& problem, const DenseVector& x_t,
                                     const DenseVector& snapshot_x, std::size_t i_t);

struct McEstimate {
  DenseVector mean;
  DenseVector std_error;  ///< per-coordinate standard error of the mean
};

/// Sample mean and standard error of `sampler` over N independent draws.
/// Sums are pairwise so the result is stable under reordering.
McEstimate mc_expectation(const std::function<DenseVector(RngStream&)>& sampler, std::size_t N,
                          RngStream& rng);

/// Pairwise (cascade) summation.
double pairwise_sum(std::span<const double> values);

/// Monte-Carlo comparison of server_aggregate, fed with votes drawn from
/// `vote_probs`, against enumerate_vote_distribution. Compares P(+1) and
/// P(0) for every coordinate; z-scores use the Monte-Carlo standard error.
struct AgreementReport {
  double max_z = 0.0;
  double max_abs_diff = 0.0;
};

AgreementReport server_vs_enumeration(const std::vector<std::vector<double>>& vote_probs,
                                      int option, TieMode tie_mode, std::size_t rounds,
                                      RngStream& rng);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// The full oracle suite behind the `verify` CLI subcommand.
std::vector<CheckResult> run_oracle_suite(std::uint64_t seed = 20240601);

}  // namespace signvr::verify

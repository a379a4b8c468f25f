// SPDX-License-Identifier: Apache-2.0
//
// Centralized sign-based optimizers: SSVR (recursive-momentum estimator with
// sign updates), SSVR-FS (its finite-sum variant with periodic full-gradient
// snapshots), and the signSGD / Signum / SGD baselines.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "signvr/metrics.hpp"
#include "signvr/oracles.hpp"
#include "signvr/rng.hpp"
#include "signvr/vector.hpp"

namespace signvr {

/// Iterates with any coordinate beyond this magnitude abort the run.
inline constexpr double kDivergenceBound = 1e12;

struct SsvrConfig {
  std::uint64_t T = 1;
  double eta = 1e-3;
  double beta = 1.0;
  std::uint64_t B0 = 1;  ///< batch for the first estimate v_1
  std::uint64_t B1 = 1;  ///< batch for every later recursion step
  std::uint64_t seed = 0;
  std::uint64_t metrics_every = 1;

  void validate() const;
};

struct SsvrFsConfig {
  std::uint64_t T = 1;
  double eta = 1e-3;
  double beta = 1.0;
  std::uint64_t I = 1;  ///< snapshot period
  std::uint64_t seed = 0;
  std::uint64_t metrics_every = 1;

  void validate() const;
};

struct BaselineConfig {
  std::uint64_t T = 1;
  double eta = 1e-3;
  std::uint64_t batch = 1;
  double momentum = 0.0;  ///< Signum only: m_t = mu m_{t-1} + (1 - mu) g_t
  std::uint64_t seed = 0;
  std::uint64_t metrics_every = 1;

  void validate() const;
};

struct StormState {
  DenseVector v;       ///< v_t
  DenseVector x_prev;  ///< point at which v_t was formed
  std::uint64_t t = 1;
};

/// Mean of grad f(x; xi) over `batch` fresh samples.
DenseVector batch_gradient(const StochasticGradOracle& oracle, const DenseVector& x,
                           std::uint64_t batch, RngStream& rng);

/// One recursive-momentum step
///   v_t = g(x_t) + (1 - beta) (v_{t-1} - g(x_{t-1})),
/// where both g terms average the same B1 fresh samples.
StormState storm_update(const StormState& state, const DenseVector& x_new,
                        const StochasticGradOracle& oracle, std::uint64_t B1, double beta,
                        RngStream& rng);

RunResult ssvr_run(const StochasticGradOracle& oracle, const SsvrConfig& cfg,
                   std::optional<DenseVector> x1 = std::nullopt);

/// Finite-sum estimator
///   v_t = g_i(x_t) + (1 - beta)(v_{t-1} - g_i(x_{t-1})) - beta (g_i(x_s) - grad f(x_s))
/// with s the most recent snapshot.
DenseVector fs_estimator_update(const DenseVector& v_prev, const DenseVector& x_t,
                                const DenseVector& x_prev, const DenseVector& snapshot_x,
                                const DenseVector& snapshot_full_grad, std::size_t i_t,
                                const FiniteSumProblem& problem, double beta);

/// Snapshots (full gradient) happen at t = 1, 1 + I, 1 + 2I, ...; the first
/// estimate is the full gradient at x_1.
RunResult ssvr_fs_run(const FiniteSumProblem& problem, const SsvrFsConfig& cfg,
                      std::optional<DenseVector> x1 = std::nullopt);

RunResult signsgd_run(const StochasticGradOracle& oracle, const BaselineConfig& cfg,
                      std::optional<DenseVector> x1 = std::nullopt);
RunResult signum_run(const StochasticGradOracle& oracle, const BaselineConfig& cfg,
                     std::optional<DenseVector> x1 = std::nullopt);
RunResult sgd_run(const StochasticGradOracle& oracle, const BaselineConfig& cfg,
                  std::optional<DenseVector> x1 = std::nullopt);

// ---------------------------------------------------------------------------
// Hyperparameter presets. Only the asymptotic orders are fixed; the hidden
// constants default to 1 and can be overridden.

struct ScaleConstants {
  double eta = 1.0;
  double beta = 1.0;
  double batch = 1.0;

  static ScaleConstants uniform(double c) { return {c, c, c}; }
};

struct PresetInputs {
  std::uint64_t T = 1;
  std::size_t d = 1;
  std::optional<std::size_t> m;  ///< finite-sum presets
  std::optional<std::size_t> n;  ///< majority-vote presets
  ScaleConstants scale;
};

using AlgorithmConfig = std::variant<SsvrConfig, SsvrFsConfig>;

/// "theorem1": beta = c T^{-2/3}, eta = c d^{-1/2} T^{-2/3}, B0 = ceil(c T^{1/3}), B1 = 1.
/// "theorem5": beta = c d^{1/3} T^{-2/3}, eta = c d^{-1/6} T^{-2/3}, B0 = 1, B1 = ceil(c d).
SsvrConfig preset_ssvr(const std::string& name, std::uint64_t T, std::size_t d,
                       ScaleConstants scale = {});

/// "theorem2": beta = c/m, I = m, eta = c / (m^{1/4} d^{1/2} T^{1/2}).
/// "theorem6": beta = c/m, I = m, eta = c min{1/(m^{1/4} d^{1/2} T^{1/2}), 1/(m d)}.
SsvrFsConfig preset_ssvr_fs(const std::string& name, std::uint64_t T, std::size_t d,
                            std::size_t m, ScaleConstants scale = {});

/// Dispatches on the preset name; throws ConfigError for unknown names.
AlgorithmConfig preset(const std::string& name, const PresetInputs& inputs);

/// ceil(x) that ignores floating-point noise just above an integer.
std::uint64_t ceil_count(double x);

}  // namespace signvr

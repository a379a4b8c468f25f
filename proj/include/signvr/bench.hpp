// SPDX-License-Identifier: Apache-2.0
//
// Config-driven experiment runner: problem construction, algorithm
// dispatch, CSV output, seed averaging, T sweeps and rate fitting.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "signvr/majority_vote.hpp"
#include "signvr/metrics.hpp"
#include "signvr/optimizers.hpp"
#include "signvr/oracles.hpp"

namespace signvr {

struct ProblemSpec {
  /// noisy_quadratic | finite_sum_quadratic | nonconvex_logistic |
  /// heterogeneous_quadratic | sign_conflict
  std::string name = "noisy_quadratic";
  std::size_t d = 10;
  double condition_number = 1.0;
  double sigma = 0.0;
  NoiseKind noise = NoiseKind::gaussian;
  std::size_t m = 10;          ///< components (finite_sum_quadratic)
  std::size_t n_samples = 100; ///< data points (nonconvex_logistic)
  double reg_lambda = 0.1;
  std::size_t nodes = 1;       ///< heterogeneous_quadratic
  double heterogeneity = 0.0;
  double envelope_radius = 1.0;
  std::optional<std::vector<double>> start;  ///< sign_conflict start point
  std::uint64_t seed = 0;                    ///< instance seed, fixed across run seeds
};

struct AlgorithmSpec {
  /// ssvr | ssvr_fs | signsgd | signum | sgd | ssvr_mv | mv_baseline
  std::string name = "ssvr";
  std::optional<std::string> preset;
  ScaleConstants scale;
  // Explicit hyperparameters; when a preset is given these override it.
  std::optional<double> eta;
  std::optional<double> beta;
  std::optional<std::uint64_t> B0;
  std::optional<std::uint64_t> B1;
  std::optional<std::uint64_t> I;
  std::optional<std::uint64_t> batch;
  std::optional<double> momentum;
};

struct MvSpec {
  int option = 2;
  TieMode tie_mode = TieMode::ternary;
  /// Defaults to the partition's certified bound for the chosen option.
  std::optional<double> G;
  unsigned workers = 1;
};

struct ExperimentConfig {
  ProblemSpec problem;
  AlgorithmSpec algorithm;
  MvSpec mv;
  std::uint64_t T = 1000;
  std::vector<std::uint64_t> seeds{0};
  std::uint64_t metrics_every = 1;
  std::string output_path = "runs/out";
  std::vector<std::uint64_t> sweep_T;  ///< grid for `sweep`

  void validate() const;
};

/// Parses the JSON config format. Unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Round-trips through parse_config.
std::string config_to_json(const ExperimentConfig& cfg);

/// Hyperparameters after preset resolution, for manifests and `presets`.
struct ResolvedAlgorithm {
  std::string description;  ///< "key=value ..." summary
};

/// One run of the configured algorithm with horizon T and the given seed.
RunResult run_single(const ExperimentConfig& cfg, std::uint64_t T, std::uint64_t seed,
                     ResolvedAlgorithm* resolved = nullptr);

std::string csv_header();
std::string to_csv(const std::vector<MetricsRow>& rows);
/// Row-wise arithmetic mean over runs with identical t columns. Integer
/// columns are averaged as reals.
std::string mean_csv(const std::vector<std::vector<MetricsRow>>& runs);

/// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

struct ExperimentOutput {
  std::vector<std::uint64_t> seeds;
  std::vector<RunResult> runs;
  std::vector<std::filesystem::path> files;
};

/// Runs every seed (in parallel over `jobs` threads), then writes
/// seed_<s>.csv, mean.csv and manifest.json under out_dir. Nothing is
/// written if any run fails.
ExperimentOutput run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                unsigned jobs = 1, std::uint64_t seed_offset = 0);

struct SlopeFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::vector<double> T_grid;
};

/// Least-squares slope of log(metric) against log(T); needs >= 3 distinct T
/// and positive metric values.
SlopeFit fit_rate_exponent(const std::vector<double>& T_grid, const std::vector<double>& metric);

struct SweepPoint {
  std::uint64_t T = 0;
  double mean_avg_grad_l1 = 0.0;  ///< seed mean of the run-averaged ||grad f||_1
  double mean_avg_grad_l2 = 0.0;
};

struct SweepOutput {
  std::vector<SweepPoint> points;
  SlopeFit fit_l1;
  SlopeFit fit_l2;
};

/// Runs the config for every T in cfg.sweep_T and every seed, writing a
/// subdirectory T_<T> per grid point plus sweep.csv and manifest.json.
SweepOutput run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                      unsigned jobs = 1, std::uint64_t seed_offset = 0);

/// In-memory variant used by tests; no files are touched.
SweepOutput sweep_in_memory(const ExperimentConfig& cfg, unsigned jobs = 1,
                            std::uint64_t seed_offset = 0);

/// Version string recorded in manifests.
std::string code_version();

}  // namespace signvr

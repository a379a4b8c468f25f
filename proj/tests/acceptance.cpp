// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Every scenario is fixed (problem seed, run seeds, horizons), so the
// output is reproducible.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "signvr/bench.hpp"
#include "signvr/errors.hpp"
#include "signvr/majority_vote.hpp"
#include "signvr/optimizers.hpp"
#include "signvr/sign_ops.hpp"
#include "signvr/verify.hpp"

namespace {

using namespace signvr;
namespace fs = std::filesystem;

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* format, ...) {
  char buf[1024];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

unsigned jobs() { return std::max(1u, std::min(16u, std::thread::hardware_concurrency())); }

// 1 -------------------------------------------------------------------------
Outcome stochastic_sign_unbiased() {
  const DenseVector v{0.5, -0.25, 0.0};
  const double R = 1.0;
  constexpr std::size_t N = 200000;
  RngStream rng(20240601, fnv1a64("acceptance/1"));
  std::vector<double> sums(3, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    const BitSignVector s = stochastic_sign(v, R, rng);
    for (std::size_t k = 0; k < 3; ++k) sums[k] += s.get(k);
  }
  bool ok = true;
  double worst = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double target = v[k] / R;
    const double bound = 4.0 * std::sqrt((1.0 - target * target) / N);
    const double dev = std::abs(sums[k] / N - target);
    worst = std::max(worst, dev / bound);
    ok = ok && dev <= bound;
  }
  return {ok, fmt("max |mean - v/R| = %.3f of the 4-sigma bound", worst)};
}

// 2 -------------------------------------------------------------------------
Outcome recursion_noiseless_exact() {
  const auto q = make_noisy_quadratic(20, 10.0, 0.0, 11);
  SsvrConfig cfg = preset_ssvr("theorem1", 1000, 20);
  cfg.seed = 1;
  const RunResult r = ssvr_run(*q, cfg);
  const double err = r.summary.max_est_err_linf;
  return {r.summary.iterations == 1000 && err <= 1e-10,
          fmt("max_t ||v_t - grad f(x_t)||_inf = %.3g over %llu iterations", err,
              static_cast<unsigned long long>(r.summary.iterations))};
}

// 3 -------------------------------------------------------------------------
Outcome svrg_equivalence() {
  RngStream rng(20240601, fnv1a64("acceptance/3"));
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = 1 + rng.uniform_index(10);
    const std::size_t m = 1 + rng.uniform_index(8);
    const auto p = make_finite_sum_quadratic(d, m, rng());
    DenseVector x(d), x_prev(d), snap(d), v(d);
    for (std::size_t k = 0; k < d; ++k) {
      x[k] = 2.0 * rng.normal();
      x_prev[k] = 2.0 * rng.normal();
      snap[k] = 2.0 * rng.normal();
      v[k] = 2.0 * rng.normal();
    }
    const std::size_t i = rng.uniform_index(m);
    const DenseVector got = fs_estimator_update(v, x, x_prev, snap, p->full_grad(snap), i, *p, 1.0);
    const DenseVector want = verify::svrg_reference_estimator(*p, x, snap, i);
    worst = std::max(worst, norm_linf(got - want));
  }

  const auto single = make_nonconvex_logistic(10, 1, 0.1, 5);
  SsvrFsConfig cfg;
  cfg.T = 500;
  cfg.I = 7;
  cfg.beta = 0.3;
  cfg.eta = 0.01;
  cfg.seed = 2;
  const RunResult r = ssvr_fs_run(*single, cfg);
  const double collapse = r.summary.max_est_err_linf;
  return {worst <= 1e-12 && collapse == 0.0,
          fmt("max deviation from SVRG %.3g on 1000 instances; m = 1 run max error %.3g", worst,
              collapse)};
}

// 4 -------------------------------------------------------------------------
Outcome variance_reduction() {
  const std::uint64_t T = 50000;
  const auto q = make_noisy_quadratic(20, 10.0, 1.0, 3);
  const auto tail_error = [&](double beta) {
    double acc = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      SsvrConfig cfg = preset_ssvr("theorem1", T, 20);
      cfg.beta = beta;
      cfg.B1 = 1;
      cfg.seed = seed;
      const RunResult r = ssvr_run(*q, cfg);
      double sum = 0.0;
      std::size_t count = 0;
      for (const MetricsRow& row : r.rows) {
        if (row.t > T - T / 10) {
          sum += row.est_err_sq;
          ++count;
        }
      }
      acc += sum / static_cast<double>(count);
    }
    return acc / 5.0;
  };
  const double reduced = tail_error(0.01);
  const double plain = tail_error(1.0);
  return {reduced <= 0.25,
          fmt("tail est_err_sq %.4f with beta = 0.01, %.4f for the one-sample estimator", reduced,
              plain)};
}

// 5 -------------------------------------------------------------------------
Outcome rate_exponent() {
  ExperimentConfig cfg;
  cfg.problem.name = "nonconvex_logistic";
  cfg.problem.d = 50;
  cfg.problem.n_samples = 200;
  cfg.problem.reg_lambda = 0.1;
  cfg.problem.seed = 7;
  cfg.algorithm.name = "ssvr";
  cfg.algorithm.preset = "theorem1";
  cfg.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  cfg.metrics_every = 1000000;
  cfg.sweep_T = {2000, 8000, 32000};
  const SweepOutput out = sweep_in_memory(cfg, jobs());
  const double exponent = out.fit_l1.exponent;
  const double ratio = out.points.front().mean_avg_grad_l1 / out.points.back().mean_avg_grad_l1;
  return {exponent >= -0.45 && exponent <= -0.20 && ratio >= 1.4 && ratio <= 4.0,
          fmt("avg ||grad||_1 = %.4g, %.4g, %.4g; exponent %.4f (R^2 %.4f); 16x ratio %.3f",
              out.points[0].mean_avg_grad_l1, out.points[1].mean_avg_grad_l1,
              out.points[2].mean_avg_grad_l1, exponent, out.fit_l1.r2, ratio)};
}

// 6 -------------------------------------------------------------------------
Outcome full_gradient_accounting() {
  bool ok = true;
  std::string detail;
  for (std::size_t m : {1u, 4u, 16u, 37u}) {
    const auto p = make_finite_sum_quadratic(5, m, 9);
    SsvrFsConfig cfg = preset_ssvr_fs("theorem2", 10 * m, 5, m);
    cfg.seed = 3;
    const RunResult r = ssvr_fs_run(*p, cfg);
    const std::uint64_t expected = 1 + (cfg.T - 1) / m;
    ok = ok && cfg.I == m && r.summary.full_grad_evals == expected;
    detail += fmt("%sm=%zu: %llu/%llu", detail.empty() ? "" : ", ", m,
                  static_cast<unsigned long long>(r.summary.full_grad_evals),
                  static_cast<unsigned long long>(expected));
  }
  return {ok, "full gradients counted/expected " + detail};
}

// 7 -------------------------------------------------------------------------
Outcome vote_distribution() {
  const std::vector<std::vector<double>> pinned{{0.9, 0.5}, {0.8, 0.5}, {0.3, 0.5}};
  const double golden =
      verify::enumerate_vote_distribution(pinned, 1, TieMode::ternary).coordinates[0].p_plus;
  RngStream rng(20240601, fnv1a64("acceptance/7"));
  const verify::AgreementReport pinned_report =
      verify::server_vs_enumeration(pinned, 1, TieMode::ternary, 100000, rng);

  double worst_z = 0.0;
  for (int table = 0; table < 50; ++table) {
    const std::size_t n = 1 + rng.uniform_index(6);
    const std::size_t d = 1 + rng.uniform_index(3);
    std::vector<std::vector<double>> probs(n, std::vector<double>(d));
    for (auto& row : probs) {
      for (double& p : row) p = rng.uniform();
    }
    const int option = 1 + static_cast<int>(rng.uniform_index(2));
    const TieMode tie = rng.bernoulli(0.5) ? TieMode::ternary : TieMode::plus_one;
    worst_z = std::max(worst_z, verify::server_vs_enumeration(probs, option, tie, 20000, rng).max_z);
  }
  const bool ok = std::abs(golden - 0.798) <= 1e-12 && pinned_report.max_z <= 4.0 && worst_z <= 4.0;
  return {ok, fmt("enumerated P(+1) = %.6f; pinned table max z %.2f over 1e5 rounds; "
                  "50 random tables max z %.2f",
                  golden, pinned_report.max_z, worst_z)};
}

// 8 -------------------------------------------------------------------------
Outcome option1_estimator_bound() {
  const QuadraticFamily family{10, 5.0, 0.5, NoiseKind::rademacher, 1.0};
  double worst = 0.0;
  std::uint64_t violations = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const NodePartition p = partition_heterogeneous(family, 8, 0.3, 100 + seed);
    MvConfig cfg = preset_mv("theorem3", 10000, 10, 8, p.bound_g_linf_sample());
    cfg.seed = seed;
    cfg.metrics_every = 10000;
    // mv_run raises ProtocolError the moment any ||v_t^j||_inf exceeds 4G.
    const RunResult r = mv_run(p, cfg);
    worst = std::max(worst, r.summary.max_node_estimator_linf / cfg.G);
    violations += r.summary.envelope_violations;
  }
  return {worst <= 4.0 && violations == 0,
          fmt("no ProtocolError in 5 x 10^4 rounds; max ||v||_inf / G = %.3f; "
              "iterates outside the certified envelope: %llu",
              worst, static_cast<unsigned long long>(violations))};
}

// 9 -------------------------------------------------------------------------
Outcome heterogeneous_sign_conflict() {
  const double radius = 1.5;
  const NodePartition p = make_sign_conflict(1, 0.0, NoiseKind::gaussian, radius,
                                             DenseVector{radius});
  std::vector<double> mv, base;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    MvConfig cfg = preset_mv("theorem4", 10000, 1, 2, p.bound_g_l2_true());
    cfg.seed = seed;
    cfg.metrics_every = 10000;
    mv.push_back(norm_l2(p.global_grad_true(mv_run(p, cfg).x_final)));
    base.push_back(norm_l2(p.global_grad_true(baseline_mv_run(p, cfg).x_final)));
  }
  const double m = median(mv), b = median(base);
  return {m <= 0.1 * b, fmt("median final ||grad f||_2: option 2 %.4f, baseline stall level %.4f",
                            m, b)};
}

// 10 ------------------------------------------------------------------------
Outcome communication_exact() {
  bool ok = true;
  std::string detail;
  for (const auto [n, d] : {std::pair<std::size_t, std::size_t>{3, 7}, {8, 64}, {5, 1000}}) {
    const NodePartition p =
        partition_heterogeneous({d, 2.0, 0.1, NoiseKind::gaussian, 10.0}, n, 0.2, 17);
    MvConfig cfg;
    cfg.option = 2;
    cfg.n = n;
    cfg.T = 20;
    cfg.eta = 1e-3;
    cfg.beta = 0.5;
    cfg.G = p.bound_g_l2_true();
    const RunResult r = mv_run(p, cfg);
    const std::uint64_t plane = (d + 7) / 8;
    bool exact = r.ledger && r.ledger->rounds().size() == cfg.T;
    for (const RoundTraffic& round : r.ledger->rounds()) {
      exact = exact && round.uplink_payload == n * plane && round.downlink_payload == plane;
    }
    ok = ok && exact;
    detail += fmt("%s(n=%zu, d=%zu): %llu up / %llu down per round%s", detail.empty() ? "" : "; ",
                  n, d, static_cast<unsigned long long>(r.ledger->rounds().front().uplink_payload),
                  static_cast<unsigned long long>(r.ledger->rounds().front().downlink_payload),
                  exact ? "" : " MISMATCH");
  }
  return {ok, detail};
}

// 11 ------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const char* configs[] = {
      R"({"problem": {"name": "nonconvex_logistic", "d": 10, "n_samples": 50, "seed": 1},
          "algorithm": {"name": "ssvr", "preset": "theorem1"}, "T": 2000, "seeds": [1, 2, 3]})",
      R"({"problem": {"name": "finite_sum_quadratic", "d": 8, "m": 12, "seed": 2},
          "algorithm": {"name": "ssvr_fs", "preset": "theorem2"}, "T": 2000, "seeds": [4, 5]})",
      R"({"problem": {"name": "heterogeneous_quadratic", "d": 6, "nodes": 5, "sigma": 0.3,
                      "noise": "rademacher", "heterogeneity": 0.5, "envelope_radius": 3.0, "seed": 3},
          "algorithm": {"name": "ssvr_mv", "preset": "theorem3"},
          "mv": {"workers": 4}, "T": 2000, "seeds": [6, 7]})",
  };
  const fs::path root = fs::temp_directory_path() / ("signvr_acceptance_" + std::to_string(::getpid()));
  std::size_t compared = 0;
  bool ok = true;
  for (std::size_t c = 0; c < std::size(configs); ++c) {
    const ExperimentConfig cfg = parse_config(configs[c]);
    const fs::path a = root / fmt("%zu_a", c), b = root / fmt("%zu_b", c);
    run_experiment(cfg, a, jobs());
    run_experiment(cfg, b, 1);
    for (const auto& entry : fs::directory_iterator(a)) {
      if (entry.path().extension() != ".csv") continue;
      ++compared;
      ok = ok && slurp(entry.path()) == slurp(b / entry.path().filename());
    }
  }
  fs::remove_all(root);
  return {ok && compared > 0, fmt("%zu CSV files byte-identical across repeated runs", compared)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "stochastic sign unbiasedness", stochastic_sign_unbiased},
      {2, "recursive estimator is exact without noise", recursion_noiseless_exact},
      {3, "finite-sum estimator matches SVRG at beta = 1", svrg_equivalence},
      {4, "variance reduction on a noisy quadratic", variance_reduction},
      {5, "rate exponent on nonconvex logistic", rate_exponent},
      {6, "full-gradient accounting", full_gradient_accounting},
      {7, "server vote distribution matches enumeration", vote_distribution},
      {8, "option 1 estimators stay within 4G", option1_estimator_bound},
      {9, "option 2 converges where sign majority vote stalls", heterogeneous_sign_conflict},
      {10, "ledger payload bytes are exact", communication_exact},
      {11, "repeated runs give byte-identical CSV", determinism},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  [%2d] %s: %s (%.2fs)\n", out.passed ? "PASS" : "FAIL", c.id, c.name,
                out.detail.c_str(), secs);
    std::fflush(stdout);
    if (!out.passed) ++failed;
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}

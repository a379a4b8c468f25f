// SPDX-License-Identifier: Apache-2.0

#include "signvr/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <memory>
#include <thread>

#include <json.hpp>

#include "signvr/errors.hpp"
#include "signvr/verify.hpp"

#ifndef SIGNVR_VERSION
#define SIGNVR_VERSION "unknown"
#endif

namespace signvr {

namespace {

using nlohmann::json;

struct Instance {
  std::shared_ptr<const StochasticGradOracle> oracle;
  std::shared_ptr<const FiniteSumProblem> finite_sum;
  std::optional<NodePartition> partition;
};

Instance build_instance(const ProblemSpec& p) {
  Instance inst;
  if (p.name == "noisy_quadratic") {
    inst.oracle = make_noisy_quadratic(p.d, p.condition_number, p.sigma, p.seed, p.noise);
  } else if (p.name == "finite_sum_quadratic") {
    inst.finite_sum = make_finite_sum_quadratic(p.d, p.m, p.seed);
  } else if (p.name == "nonconvex_logistic") {
    inst.finite_sum = make_nonconvex_logistic(p.d, p.n_samples, p.reg_lambda, p.seed);
  } else if (p.name == "heterogeneous_quadratic") {
    QuadraticFamily family{p.d, p.condition_number, p.sigma, p.noise, p.envelope_radius};
    inst.partition = partition_heterogeneous(family, p.nodes, p.heterogeneity, p.seed);
  } else if (p.name == "sign_conflict") {
    DenseVector start = DenseVector::unit(p.d, 0) * p.envelope_radius;
    if (p.start) {
      if (p.start->size() != p.d) throw ConfigError("problem.start must have d entries");
      start = DenseVector(*p.start);
    }
    inst.partition = make_sign_conflict(p.d, p.sigma, p.noise, p.envelope_radius, start);
  } else {
    throw ConfigError("unknown problem '" + p.name + "'");
  }
  if (inst.finite_sum) inst.oracle = std::make_shared<FiniteSumSampler>(inst.finite_sum);
  return inst;
}

template <typename T>
T required(const std::optional<T>& value, const char* key, const std::string& algorithm) {
  if (!value) {
    throw ConfigError(algorithm + " without a preset needs algorithm." + key);
  }
  return *value;
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const StochasticGradOracle& need_oracle(const Instance& inst, const std::string& algorithm) {
  if (!inst.oracle) {
    throw ConfigError(algorithm + " runs on a single objective; this problem is a node partition "
                                  "(use ssvr_mv or mv_baseline)");
  }
  return *inst.oracle;
}

const NodePartition& need_partition(const Instance& inst, const std::string& algorithm) {
  if (!inst.partition) {
    throw ConfigError(algorithm +
                      " needs a node partition (heterogeneous_quadratic or sign_conflict)");
  }
  return *inst.partition;
}

double default_G(const NodePartition& partition, int option) {
  const double G =
      option == 1 ? partition.bound_g_linf_sample() : partition.bound_g_l2_true();
  if (!std::isfinite(G)) {
    throw ConfigError("the partition has no finite certified G for option " +
                      std::to_string(option) + "; set mv.G explicitly");
  }
  return G;
}

MvConfig resolve_mv(const ExperimentConfig& cfg, const NodePartition& partition, std::uint64_t T,
                    std::uint64_t seed) {
  const AlgorithmSpec& a = cfg.algorithm;
  MvConfig mv;
  int option = cfg.mv.option;
  if (a.preset) {
    if (*a.preset == "theorem3") option = 1;
    if (*a.preset == "theorem4") option = 2;
  }
  const double G = cfg.mv.G ? *cfg.mv.G : default_G(partition, option);
  if (a.preset) {
    mv = preset_mv(*a.preset, T, partition.dim(), partition.num_nodes(), G, a.scale);
  } else {
    mv.option = option;
    mv.eta = required(a.eta, "eta", a.name);
    mv.beta = a.name == "mv_baseline" ? a.beta.value_or(1.0) : required(a.beta, "beta", a.name);
    mv.G = G;
  }
  if (a.eta) mv.eta = *a.eta;
  if (a.beta) mv.beta = *a.beta;
  mv.n = partition.num_nodes();
  mv.T = T;
  mv.tie_mode = cfg.mv.tie_mode;
  mv.seed = seed;
  mv.metrics_every = cfg.metrics_every;
  mv.workers = cfg.mv.workers;
  return mv;
}

std::string format_row(const MetricsRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%.17g,%.17g,%llu,%llu,%d\n",
                static_cast<unsigned long long>(r.t), r.loss, r.grad_l1, r.grad_l2, r.est_err_sq,
                static_cast<unsigned long long>(r.bits_up),
                static_cast<unsigned long long>(r.bits_down), r.envelope_ok ? 1 : 0);
  return buf;
}

/// Runs task(i) for i in [0, count) on `jobs` threads. The first exception
/// in index order is rethrown after all threads finish.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Writes every (path, content) pair to a temp file first and renames only
/// once all writes succeeded.
void commit_files(const std::vector<std::pair<std::filesystem::path, std::string>>& files) {
  std::vector<std::filesystem::path> temps;
  try {
    for (const auto& [path, content] : files) {
      if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
      auto tmp = path;
      tmp += ".tmp";
      temps.push_back(tmp);
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << content;
      out.flush();
      if (!out) throw std::runtime_error("failed writing '" + tmp.string() + "'");
    }
    for (std::size_t i = 0; i < files.size(); ++i) std::filesystem::rename(temps[i], files[i].first);
  } catch (...) {
    std::error_code ignored;
    for (const auto& tmp : temps) std::filesystem::remove(tmp, ignored);
    throw;
  }
}

json summary_json(std::uint64_t seed, const RunResult& r) {
  const RunSummary& s = r.summary;
  return json{{"seed", seed},
              {"iterations", s.iterations},
              {"tau_out", r.tau_out},
              {"avg_grad_l1", s.avg_grad_l1},
              {"avg_grad_l2", s.avg_grad_l2},
              {"avg_est_err_sq", s.avg_est_err_sq},
              {"sample_grad_evals", s.sample_grad_evals},
              {"component_grad_evals", s.component_grad_evals},
              {"full_grad_evals", s.full_grad_evals},
              {"envelope_violations", s.envelope_violations},
              {"x_out", r.x_out.values()},
              {"x_final", r.x_final.values()}};
}

std::vector<std::uint64_t> shifted_seeds(const ExperimentConfig& cfg, std::uint64_t offset) {
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s : cfg.seeds) seeds.push_back(s + offset);
  return seeds;
}

double seed_mean(const std::vector<double>& values) {
  return verify::pairwise_sum(values) / static_cast<double>(values.size());
}

}  // namespace

std::string code_version() { return SIGNVR_VERSION; }

RunResult run_single(const ExperimentConfig& cfg, std::uint64_t T, std::uint64_t seed,
                     ResolvedAlgorithm* resolved) {
  cfg.validate();
  const Instance inst = build_instance(cfg.problem);
  const AlgorithmSpec& a = cfg.algorithm;
  std::string desc;

  if (a.name == "ssvr") {
    SsvrConfig c;
    if (a.preset) {
      c = preset_ssvr(*a.preset, T, cfg.problem.d, a.scale);
    } else {
      c.eta = required(a.eta, "eta", a.name);
      c.beta = required(a.beta, "beta", a.name);
    }
    if (a.eta) c.eta = *a.eta;
    if (a.beta) c.beta = *a.beta;
    if (a.B0) c.B0 = *a.B0;
    if (a.B1) c.B1 = *a.B1;
    c.T = T;
    c.seed = seed;
    c.metrics_every = cfg.metrics_every;
    desc = "ssvr eta=" + fmt_g(c.eta) + " beta=" + fmt_g(c.beta) + " B0=" + std::to_string(c.B0) +
           " B1=" + std::to_string(c.B1);
    if (resolved) resolved->description = desc;
    return ssvr_run(need_oracle(inst, a.name), c);
  }

  if (a.name == "ssvr_fs") {
    if (!inst.finite_sum) throw ConfigError("ssvr_fs needs a finite-sum problem");
    const std::size_t m = inst.finite_sum->num_components();
    SsvrFsConfig c;
    if (a.preset) {
      c = preset_ssvr_fs(*a.preset, T, cfg.problem.d, m, a.scale);
    } else {
      c.eta = required(a.eta, "eta", a.name);
      c.beta = required(a.beta, "beta", a.name);
      c.I = m;
    }
    if (a.eta) c.eta = *a.eta;
    if (a.beta) c.beta = *a.beta;
    if (a.I) c.I = *a.I;
    c.T = T;
    c.seed = seed;
    c.metrics_every = cfg.metrics_every;
    desc = "ssvr_fs eta=" + fmt_g(c.eta) + " beta=" + fmt_g(c.beta) + " I=" + std::to_string(c.I);
    if (resolved) resolved->description = desc;
    return ssvr_fs_run(*inst.finite_sum, c);
  }

  if (a.name == "signsgd" || a.name == "signum" || a.name == "sgd") {
    if (a.preset) throw ConfigError(a.name + " has no presets; set algorithm.eta");
    BaselineConfig c;
    c.eta = required(a.eta, "eta", a.name);
    c.batch = a.batch.value_or(1);
    c.momentum = a.name == "signum" ? a.momentum.value_or(0.9) : a.momentum.value_or(0.0);
    c.T = T;
    c.seed = seed;
    c.metrics_every = cfg.metrics_every;
    desc = a.name + " eta=" + fmt_g(c.eta) + " batch=" + std::to_string(c.batch) +
           " momentum=" + fmt_g(c.momentum);
    if (resolved) resolved->description = desc;
    const StochasticGradOracle& oracle = need_oracle(inst, a.name);
    if (a.name == "signsgd") return signsgd_run(oracle, c);
    if (a.name == "signum") return signum_run(oracle, c);
    return sgd_run(oracle, c);
  }

  // ssvr_mv / mv_baseline
  const NodePartition& partition = need_partition(inst, a.name);
  const MvConfig mv = resolve_mv(cfg, partition, T, seed);
  desc = a.name + " option=" + std::to_string(mv.option) + " n=" + std::to_string(mv.n) +
         " eta=" + fmt_g(mv.eta) + " beta=" + fmt_g(mv.beta) + " G=" + fmt_g(mv.G) +
         " tie_mode=" + to_string(mv.tie_mode);
  if (resolved) resolved->description = desc;
  return a.name == "ssvr_mv" ? mv_run(partition, mv) : baseline_mv_run(partition, mv);
}

std::string csv_header() { return "t,loss,grad_l1,grad_l2,est_err_sq,bits_up,bits_down,envelope_ok\n"; }

std::string to_csv(const std::vector<MetricsRow>& rows) {
  std::string out = csv_header();
  for (const auto& r : rows) out += format_row(r);
  return out;
}

std::string mean_csv(const std::vector<std::vector<MetricsRow>>& runs) {
  if (runs.empty()) throw InvalidInput("mean_csv: no runs");
  const std::size_t rows = runs.front().size();
  for (const auto& run : runs) {
    if (run.size() != rows) throw InvalidInput("mean_csv: runs have different row counts");
  }
  std::string out = csv_header();
  std::vector<double> col(runs.size());
  const auto mean_of = [&](const std::function<double(const MetricsRow&)>& field, std::size_t i) {
    for (std::size_t s = 0; s < runs.size(); ++s) col[s] = field(runs[s][i]);
    return seed_mean(col);
  };
  for (std::size_t i = 0; i < rows; ++i) {
    const std::uint64_t t = runs.front()[i].t;
    for (const auto& run : runs) {
      if (run[i].t != t) throw InvalidInput("mean_csv: runs disagree on the t column");
    }
    char buf[320];
    std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<unsigned long long>(t),
                  mean_of([](const MetricsRow& r) { return r.loss; }, i),
                  mean_of([](const MetricsRow& r) { return r.grad_l1; }, i),
                  mean_of([](const MetricsRow& r) { return r.grad_l2; }, i),
                  mean_of([](const MetricsRow& r) { return r.est_err_sq; }, i),
                  mean_of([](const MetricsRow& r) { return static_cast<double>(r.bits_up); }, i),
                  mean_of([](const MetricsRow& r) { return static_cast<double>(r.bits_down); }, i),
                  mean_of([](const MetricsRow& r) { return r.envelope_ok ? 1.0 : 0.0; }, i));
    out += buf;
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  commit_files({{path, content}});
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                unsigned jobs, std::uint64_t seed_offset) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  ExperimentOutput out;
  out.seeds = shifted_seeds(cfg, seed_offset);
  out.runs.resize(out.seeds.size());
  ResolvedAlgorithm resolved;
  // Resolve once up front so configuration errors surface before any work.
  run_single(cfg, 1, out.seeds.front(), &resolved);
  parallel_for(out.seeds.size(), jobs,
               [&](std::size_t i) { out.runs[i] = run_single(cfg, cfg.T, out.seeds[i]); });

  std::vector<std::pair<std::filesystem::path, std::string>> files;
  std::vector<std::vector<MetricsRow>> all_rows;
  json summaries = json::array();
  for (std::size_t i = 0; i < out.seeds.size(); ++i) {
    files.emplace_back(out_dir / ("seed_" + std::to_string(out.seeds[i]) + ".csv"),
                       to_csv(out.runs[i].rows));
    all_rows.push_back(out.runs[i].rows);
    summaries.push_back(summary_json(out.seeds[i], out.runs[i]));
  }
  files.emplace_back(out_dir / "mean.csv", mean_csv(all_rows));
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  const json manifest{{"code_version", code_version()},
                      {"config", json::parse(config_to_json(cfg))},
                      {"resolved", resolved.description},
                      {"seeds", out.seeds},
                      {"wall_clock_seconds", wall},
                      {"runs", summaries}};
  files.emplace_back(out_dir / "manifest.json", manifest.dump(2) + "\n");
  commit_files(files);
  for (const auto& f : files) out.files.push_back(f.first);
  return out;
}

SlopeFit fit_rate_exponent(const std::vector<double>& T_grid, const std::vector<double>& metric) {
  if (T_grid.size() != metric.size()) throw InvalidInput("fit_rate_exponent: length mismatch");
  std::vector<double> sorted = T_grid;
  std::sort(sorted.begin(), sorted.end());
  if (std::unique(sorted.begin(), sorted.end()) - sorted.begin() < 3) {
    throw InvalidInput("fit_rate_exponent: need at least 3 distinct T values");
  }
  const std::size_t n = T_grid.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(T_grid[i] > 0.0) || !(metric[i] > 0.0)) {
      throw InvalidInput("fit_rate_exponent: T and metric values must be positive");
    }
    lx[i] = std::log(T_grid[i]);
    ly[i] = std::log(metric[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  SlopeFit fit;
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  // A constant metric is fit perfectly by slope 0.
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.T_grid = T_grid;
  return fit;
}

namespace {

struct SweepRuns {
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<RunResult>> by_T;  // [grid index][seed index]
};

SweepRuns run_grid(const ExperimentConfig& cfg, unsigned jobs, std::uint64_t seed_offset) {
  cfg.validate();
  if (cfg.sweep_T.size() < 3) throw ConfigError("sweep.T needs at least 3 values");
  SweepRuns runs;
  runs.seeds = shifted_seeds(cfg, seed_offset);
  const std::size_t S = runs.seeds.size();
  runs.by_T.assign(cfg.sweep_T.size(), std::vector<RunResult>(S));
  run_single(cfg, 1, runs.seeds.front());
  parallel_for(cfg.sweep_T.size() * S, jobs, [&](std::size_t k) {
    runs.by_T[k / S][k % S] = run_single(cfg, cfg.sweep_T[k / S], runs.seeds[k % S]);
  });
  return runs;
}

SweepOutput summarize(const ExperimentConfig& cfg, const SweepRuns& runs) {
  SweepOutput out;
  std::vector<double> grid, l1, l2;
  for (std::size_t g = 0; g < cfg.sweep_T.size(); ++g) {
    std::vector<double> a, b;
    for (const auto& r : runs.by_T[g]) {
      a.push_back(r.summary.avg_grad_l1);
      b.push_back(r.summary.avg_grad_l2);
    }
    SweepPoint p{cfg.sweep_T[g], seed_mean(a), seed_mean(b)};
    out.points.push_back(p);
    grid.push_back(static_cast<double>(p.T));
    l1.push_back(p.mean_avg_grad_l1);
    l2.push_back(p.mean_avg_grad_l2);
  }
  out.fit_l1 = fit_rate_exponent(grid, l1);
  out.fit_l2 = fit_rate_exponent(grid, l2);
  return out;
}

json fit_json(const SlopeFit& f) {
  return json{{"exponent", f.exponent}, {"intercept", f.intercept}, {"r2", f.r2}, {"T_grid", f.T_grid}};
}

}  // namespace

SweepOutput sweep_in_memory(const ExperimentConfig& cfg, unsigned jobs, std::uint64_t seed_offset) {
  return summarize(cfg, run_grid(cfg, jobs, seed_offset));
}

SweepOutput run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                      unsigned jobs, std::uint64_t seed_offset) {
  const auto started = std::chrono::steady_clock::now();
  const SweepRuns runs = run_grid(cfg, jobs, seed_offset);
  SweepOutput out = summarize(cfg, runs);

  std::vector<std::pair<std::filesystem::path, std::string>> files;
  std::string table = "T,mean_avg_grad_l1,mean_avg_grad_l2\n";
  for (std::size_t g = 0; g < cfg.sweep_T.size(); ++g) {
    const auto dir = out_dir / ("T_" + std::to_string(cfg.sweep_T[g]));
    std::vector<std::vector<MetricsRow>> rows;
    for (std::size_t s = 0; s < runs.seeds.size(); ++s) {
      files.emplace_back(dir / ("seed_" + std::to_string(runs.seeds[s]) + ".csv"),
                         to_csv(runs.by_T[g][s].rows));
      rows.push_back(runs.by_T[g][s].rows);
    }
    files.emplace_back(dir / "mean.csv", mean_csv(rows));
    const SweepPoint& p = out.points[g];
    table += std::to_string(p.T) + "," + fmt_g(p.mean_avg_grad_l1) + "," +
             fmt_g(p.mean_avg_grad_l2) + "\n";
  }
  files.emplace_back(out_dir / "sweep.csv", table);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  const json manifest{{"code_version", code_version()},
                      {"config", json::parse(config_to_json(cfg))},
                      {"seeds", runs.seeds},
                      {"wall_clock_seconds", wall},
                      {"fit_grad_l1", fit_json(out.fit_l1)},
                      {"fit_grad_l2", fit_json(out.fit_l2)}};
  files.emplace_back(out_dir / "manifest.json", manifest.dump(2) + "\n");
  commit_files(files);
  return out;
}

}  // namespace signvr

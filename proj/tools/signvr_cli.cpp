// SPDX-License-Identifier: Apache-2.0
//
// signvr: run, sweep, verify, presets.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "signvr/bench.hpp"
#include "signvr/verify.hpp"

namespace {

using namespace signvr;

struct RunArgs {
  std::string config_pos;
  std::string config_opt;
  std::string out;
  unsigned jobs = 1;
  std::uint64_t seed_offset = 0;

  std::string config_path() const {
    if (!config_pos.empty() && !config_opt.empty() && config_pos != config_opt) {
      throw CLI::ValidationError("config given twice with different paths");
    }
    const std::string p = config_pos.empty() ? config_opt : config_pos;
    if (p.empty()) throw CLI::RequiredError("a config path (positional or --config)");
    return p;
  }
};

void add_run_flags(CLI::App* cmd, RunArgs& args) {
  cmd->add_option("config_file", args.config_pos, "experiment config (JSON)");
  cmd->add_option("--config", args.config_opt, "experiment config (JSON)");
  cmd->add_option("--out", args.out, "output directory (default: output_path from the config)");
  cmd->add_option("--jobs", args.jobs, "parallel runs")->check(CLI::PositiveNumber);
  cmd->add_option("--seed-offset", args.seed_offset, "added to every configured seed");
}

int cmd_run(const RunArgs& args) {
  const ExperimentConfig cfg = load_config(args.config_path());
  const std::filesystem::path out = args.out.empty() ? cfg.output_path : args.out;
  const ExperimentOutput result = run_experiment(cfg, out, args.jobs, args.seed_offset);
  for (std::size_t i = 0; i < result.seeds.size(); ++i) {
    const RunSummary& s = result.runs[i].summary;
    std::printf("seed %llu: avg ||grad||_1 = %.6g, avg ||grad||_2 = %.6g, final ||grad||_2 = %.6g\n",
                static_cast<unsigned long long>(result.seeds[i]), s.avg_grad_l1, s.avg_grad_l2,
                result.runs[i].rows.empty() ? 0.0 : result.runs[i].rows.back().grad_l2);
  }
  std::printf("wrote %zu files to %s\n", result.files.size(), out.string().c_str());
  return 0;
}

int cmd_sweep(const RunArgs& args) {
  const ExperimentConfig cfg = load_config(args.config_path());
  const std::filesystem::path out = args.out.empty() ? cfg.output_path : args.out;
  const SweepOutput result = run_sweep(cfg, out, args.jobs, args.seed_offset);
  std::printf("%12s %18s %18s\n", "T", "avg ||grad||_1", "avg ||grad||_2");
  for (const auto& p : result.points) {
    std::printf("%12llu %18.6g %18.6g\n", static_cast<unsigned long long>(p.T), p.mean_avg_grad_l1,
                p.mean_avg_grad_l2);
  }
  std::printf("fitted exponent (l1): %.4f  R^2 = %.4f\n", result.fit_l1.exponent, result.fit_l1.r2);
  std::printf("fitted exponent (l2): %.4f  R^2 = %.4f\n", result.fit_l2.exponent, result.fit_l2.r2);
  return 0;
}

int cmd_verify(std::uint64_t seed) {
  const auto checks = verify::run_oracle_suite(seed);
  int failed = 0;
  for (const auto& c : checks) {
    std::printf("%s  %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    if (!c.passed) ++failed;
  }
  std::printf("%zu checks, %d failed\n", checks.size(), failed);
  return failed == 0 ? 0 : 1;
}

struct PresetArgs {
  std::uint64_t T = 1000;
  std::size_t d = 10;
  std::optional<std::size_t> m;
  std::size_t n = 1;
  double G = 1.0;
  double c = 1.0;
};

int cmd_presets(const PresetArgs& a) {
  const ScaleConstants scale = ScaleConstants::uniform(a.c);
  for (const char* name : {"theorem1", "theorem5"}) {
    try {
      const SsvrConfig s = preset_ssvr(name, a.T, a.d, scale);
      std::printf("%s: beta=%.6g eta=%.6g B0=%llu B1=%llu\n", name, s.beta, s.eta,
                  static_cast<unsigned long long>(s.B0), static_cast<unsigned long long>(s.B1));
    } catch (const std::exception& e) {
      std::printf("%s: unavailable (%s)\n", name, e.what());
    }
  }
  if (a.m) {
    for (const char* name : {"theorem2", "theorem6"}) {
      try {
        const SsvrFsConfig s = preset_ssvr_fs(name, a.T, a.d, *a.m, scale);
        std::printf("%s: beta=%.6g eta=%.6g I=%llu\n", name, s.beta, s.eta,
                    static_cast<unsigned long long>(s.I));
      } catch (const std::exception& e) {
        std::printf("%s: unavailable (%s)\n", name, e.what());
      }
    }
  } else {
    std::printf("theorem2, theorem6: pass --m for the finite-sum presets\n");
  }
  for (const char* name : {"theorem3", "theorem4"}) {
    try {
      const MvConfig s = preset_mv(name, a.T, a.d, a.n, a.G, scale);
      std::printf("%s: option=%d beta=%.6g eta=%.6g G=%.6g", name, s.option, s.beta, s.eta, s.G);
      if (s.option == 1) std::printf(" R=%.6g", s.option1_radius());
      std::printf("\n");
    } catch (const std::exception& e) {
      std::printf("%s: unavailable (%s)\n", name, e.what());
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sign-based variance-reduced optimizers and majority-vote simulation"};
  app.require_subcommand(1);

  RunArgs run_args;
  add_run_flags(app.add_subcommand("run", "run one experiment config"), run_args);
  RunArgs sweep_args;
  add_run_flags(app.add_subcommand("sweep", "run a config over its sweep.T grid"), sweep_args);

  std::uint64_t verify_seed = 20240601;
  auto* verify_cmd = app.add_subcommand("verify", "run the oracle checks");
  verify_cmd->add_option("--seed", verify_seed, "seed for the Monte-Carlo checks");

  PresetArgs preset_args;
  auto* presets_cmd = app.add_subcommand("presets", "print theorem presets");
  presets_cmd->add_option("--T", preset_args.T, "iterations")->check(CLI::PositiveNumber);
  presets_cmd->add_option("--d", preset_args.d, "dimension")->check(CLI::PositiveNumber);
  presets_cmd->add_option("--m", preset_args.m, "finite-sum components");
  presets_cmd->add_option("--n", preset_args.n, "nodes")->check(CLI::PositiveNumber);
  presets_cmd->add_option("--G", preset_args.G, "gradient bound")->check(CLI::PositiveNumber);
  presets_cmd->add_option("--c", preset_args.c, "scale constant for every preset")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (app.got_subcommand("run")) return cmd_run(run_args);
    if (app.got_subcommand("sweep")) return cmd_sweep(sweep_args);
    if (app.got_subcommand("verify")) return cmd_verify(verify_seed);
    return cmd_presets(preset_args);
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "error: %s\n%s", e.what(), app.help().c_str());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

// SPDX-License-Identifier: Apache-2.0
//
// JSON experiment configs.

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "signvr/bench.hpp"
#include "signvr/errors.hpp"

namespace signvr {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (obj.contains(key)) out = get<T>(obj, key, where);
}

template <typename T>
void read(const json& obj, const char* key, std::optional<T>& out, const std::string& where) {
  if (obj.contains(key)) out = get<T>(obj, key, where);
}

ProblemSpec parse_problem(const json& j) {
  reject_unknown(j,
                 {"name", "d", "condition_number", "sigma", "noise", "m", "n_samples",
                  "reg_lambda", "nodes", "heterogeneity", "envelope_radius", "start", "seed"},
                 "problem");
  ProblemSpec p;
  p.name = get<std::string>(j, "name", "problem");
  read(j, "d", p.d, "problem");
  read(j, "condition_number", p.condition_number, "problem");
  read(j, "sigma", p.sigma, "problem");
  if (j.contains("noise")) p.noise = parse_noise_kind(get<std::string>(j, "noise", "problem"));
  read(j, "m", p.m, "problem");
  read(j, "n_samples", p.n_samples, "problem");
  read(j, "reg_lambda", p.reg_lambda, "problem");
  read(j, "nodes", p.nodes, "problem");
  read(j, "heterogeneity", p.heterogeneity, "problem");
  read(j, "envelope_radius", p.envelope_radius, "problem");
  read(j, "start", p.start, "problem");
  read(j, "seed", p.seed, "problem");
  return p;
}

AlgorithmSpec parse_algorithm(const json& j) {
  reject_unknown(j,
                 {"name", "preset", "scale_constants", "eta", "beta", "B0", "B1", "I", "batch",
                  "momentum"},
                 "algorithm");
  AlgorithmSpec a;
  a.name = get<std::string>(j, "name", "algorithm");
  read(j, "preset", a.preset, "algorithm");
  if (j.contains("scale_constants")) {
    const json& s = j.at("scale_constants");
    if (s.is_number()) {
      a.scale = ScaleConstants::uniform(s.get<double>());
    } else {
      reject_unknown(s, {"eta", "beta", "batch"}, "algorithm.scale_constants");
      read(s, "eta", a.scale.eta, "algorithm.scale_constants");
      read(s, "beta", a.scale.beta, "algorithm.scale_constants");
      read(s, "batch", a.scale.batch, "algorithm.scale_constants");
    }
  }
  read(j, "eta", a.eta, "algorithm");
  read(j, "beta", a.beta, "algorithm");
  read(j, "B0", a.B0, "algorithm");
  read(j, "B1", a.B1, "algorithm");
  read(j, "I", a.I, "algorithm");
  read(j, "batch", a.batch, "algorithm");
  read(j, "momentum", a.momentum, "algorithm");
  return a;
}

MvSpec parse_mv(const json& j) {
  reject_unknown(j, {"option", "tie_mode", "G", "workers"}, "mv");
  MvSpec mv;
  read(j, "option", mv.option, "mv");
  if (j.contains("tie_mode")) mv.tie_mode = parse_tie_mode(get<std::string>(j, "tie_mode", "mv"));
  read(j, "G", mv.G, "mv");
  read(j, "workers", mv.workers, "mv");
  return mv;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (T < 1) throw ConfigError("T must be >= 1");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (metrics_every < 1) throw ConfigError("metrics_every must be >= 1");
  for (std::uint64_t t : sweep_T) {
    if (t < 1) throw ConfigError("sweep.T entries must be >= 1");
  }
  static const std::set<std::string> problems{"noisy_quadratic", "finite_sum_quadratic",
                                              "nonconvex_logistic", "heterogeneous_quadratic",
                                              "sign_conflict"};
  if (!problems.count(problem.name)) throw ConfigError("unknown problem '" + problem.name + "'");
  static const std::set<std::string> algorithms{"ssvr",  "ssvr_fs", "signsgd",    "signum",
                                                "sgd",   "ssvr_mv", "mv_baseline"};
  if (!algorithms.count(algorithm.name)) {
    throw ConfigError("unknown algorithm '" + algorithm.name + "'");
  }
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j,
                 {"problem", "algorithm", "mv", "T", "seeds", "metrics_every", "output_path",
                  "sweep"},
                 "config");
  ExperimentConfig cfg;
  if (!j.contains("problem")) throw ConfigError("config needs a 'problem' section");
  if (!j.contains("algorithm")) throw ConfigError("config needs an 'algorithm' section");
  cfg.problem = parse_problem(j.at("problem"));
  cfg.algorithm = parse_algorithm(j.at("algorithm"));
  if (j.contains("mv")) cfg.mv = parse_mv(j.at("mv"));
  read(j, "T", cfg.T, "config");
  read(j, "seeds", cfg.seeds, "config");
  read(j, "metrics_every", cfg.metrics_every, "config");
  read(j, "output_path", cfg.output_path, "config");
  if (j.contains("sweep")) {
    reject_unknown(j.at("sweep"), {"T"}, "sweep");
    read(j.at("sweep"), "T", cfg.sweep_T, "sweep");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json p{{"name", cfg.problem.name},
         {"d", cfg.problem.d},
         {"condition_number", cfg.problem.condition_number},
         {"sigma", cfg.problem.sigma},
         {"noise", to_string(cfg.problem.noise)},
         {"m", cfg.problem.m},
         {"n_samples", cfg.problem.n_samples},
         {"reg_lambda", cfg.problem.reg_lambda},
         {"nodes", cfg.problem.nodes},
         {"heterogeneity", cfg.problem.heterogeneity},
         {"envelope_radius", cfg.problem.envelope_radius},
         {"seed", cfg.problem.seed}};
  if (cfg.problem.start) p["start"] = *cfg.problem.start;

  const AlgorithmSpec& a = cfg.algorithm;
  json alg{{"name", a.name},
           {"scale_constants", {{"eta", a.scale.eta}, {"beta", a.scale.beta}, {"batch", a.scale.batch}}}};
  if (a.preset) alg["preset"] = *a.preset;
  if (a.eta) alg["eta"] = *a.eta;
  if (a.beta) alg["beta"] = *a.beta;
  if (a.B0) alg["B0"] = *a.B0;
  if (a.B1) alg["B1"] = *a.B1;
  if (a.I) alg["I"] = *a.I;
  if (a.batch) alg["batch"] = *a.batch;
  if (a.momentum) alg["momentum"] = *a.momentum;

  json mv{{"option", cfg.mv.option},
          {"tie_mode", to_string(cfg.mv.tie_mode)},
          {"workers", cfg.mv.workers}};
  if (cfg.mv.G) mv["G"] = *cfg.mv.G;

  json j{{"problem", p},
         {"algorithm", alg},
         {"mv", mv},
         {"T", cfg.T},
         {"seeds", cfg.seeds},
         {"metrics_every", cfg.metrics_every},
         {"output_path", cfg.output_path}};
  if (!cfg.sweep_T.empty()) j["sweep"] = {{"T", cfg.sweep_T}};
  return j.dump(2);
}

}  // namespace signvr

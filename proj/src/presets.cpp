// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "signvr/errors.hpp"
#include "signvr/optimizers.hpp"

namespace signvr {

namespace {

void check_scale(const ScaleConstants& c) {
  if (!(c.eta > 0.0) || !(c.beta > 0.0) || !(c.batch > 0.0)) {
    throw ConfigError("scale constants must be positive");
  }
}

double checked_beta(double beta, const std::string& name) {
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw ConfigError(name + ": preset beta = " + std::to_string(beta) +
                      " falls outside (0, 1]; lower the beta scale constant");
  }
  return beta;
}

}  // namespace

std::uint64_t ceil_count(double x) {
  const double rounded = std::round(x);
  if (std::abs(x - rounded) <= 1e-9 * std::max(1.0, std::abs(x))) {
    return static_cast<std::uint64_t>(std::max(1.0, rounded));
  }
  return static_cast<std::uint64_t>(std::max(1.0, std::ceil(x)));
}

SsvrConfig preset_ssvr(const std::string& name, std::uint64_t T, std::size_t d,
                       ScaleConstants scale) {
  if (T < 1 || d < 1) throw ConfigError(name + ": T and d must be >= 1");
  check_scale(scale);
  const double t = static_cast<double>(T);
  const double dd = static_cast<double>(d);
  const double t_23 = std::pow(std::cbrt(t), 2.0);  // T^{2/3}

  SsvrConfig cfg;
  cfg.T = T;
  if (name == "theorem1") {
    cfg.beta = checked_beta(scale.beta / t_23, name);
    cfg.eta = scale.eta / (std::sqrt(dd) * t_23);
    cfg.B0 = ceil_count(scale.batch * std::cbrt(t));
    cfg.B1 = 1;
  } else if (name == "theorem5") {
    cfg.beta = checked_beta(scale.beta * std::cbrt(dd) / t_23, name);
    cfg.eta = scale.eta / (std::pow(dd, 1.0 / 6.0) * t_23);
    cfg.B0 = 1;
    cfg.B1 = ceil_count(scale.batch * dd);
  } else {
    throw ConfigError("unknown SSVR preset '" + name + "' (expected theorem1 or theorem5)");
  }
  return cfg;
}

SsvrFsConfig preset_ssvr_fs(const std::string& name, std::uint64_t T, std::size_t d,
                            std::size_t m, ScaleConstants scale) {
  if (T < 1 || d < 1 || m < 1) throw ConfigError(name + ": T, d and m must be >= 1");
  check_scale(scale);
  const double t = static_cast<double>(T);
  const double dd = static_cast<double>(d);
  const double mm = static_cast<double>(m);
  const double base = 1.0 / (std::sqrt(std::sqrt(mm)) * std::sqrt(dd) * std::sqrt(t));

  SsvrFsConfig cfg;
  cfg.T = T;
  cfg.I = m;
  cfg.beta = checked_beta(scale.beta / mm, name);
  if (name == "theorem2") {
    cfg.eta = scale.eta * base;
  } else if (name == "theorem6") {
    cfg.eta = scale.eta * std::min(base, 1.0 / (mm * dd));
  } else {
    throw ConfigError("unknown SSVR-FS preset '" + name + "' (expected theorem2 or theorem6)");
  }
  return cfg;
}

AlgorithmConfig preset(const std::string& name, const PresetInputs& inputs) {
  if (name == "theorem1" || name == "theorem5") {
    return preset_ssvr(name, inputs.T, inputs.d, inputs.scale);
  }
  if (name == "theorem2" || name == "theorem6") {
    if (!inputs.m) throw ConfigError(name + " needs the number of components m");
    return preset_ssvr_fs(name, inputs.T, inputs.d, *inputs.m, inputs.scale);
  }
  throw ConfigError("unknown preset '" + name + "'");
}

}  // namespace signvr

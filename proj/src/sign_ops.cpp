// SPDX-License-Identifier: Apache-2.0

#include "signvr/sign_ops.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "signvr/errors.hpp"

namespace signvr {

namespace {

void require_finite(const DenseVector& v, const char* where) {
  if (v.empty()) throw InvalidInput(std::string(where) + ": empty vector");
  if (!v.all_finite()) throw InvalidInput(std::string(where) + ": non-finite entry");
}

}  // namespace

SignVector sign(const DenseVector& v) {
  require_finite(v, "sign");
  std::vector<std::int8_t> out(v.dim());
  for (std::size_t k = 0; k < v.dim(); ++k) {
    out[k] = static_cast<std::int8_t>((v[k] > 0.0) - (v[k] < 0.0));
  }
  return SignVector(std::move(out));
}

BitSignVector sign_bit(const DenseVector& v) {
  require_finite(v, "sign_bit");
  BitSignVector out(v.dim());
  for (std::size_t k = 0; k < v.dim(); ++k) out.set(k, v[k] >= 0.0);
  return out;
}

BitSignVector stochastic_sign(const DenseVector& v, double radius, RngStream& rng) {
  require_finite(v, "stochastic_sign");
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw InvalidInput("stochastic_sign: radius must be positive and finite");
  }
  const double inf_norm = norm_linf(v);
  if (inf_norm > radius) {
    throw DomainViolation("stochastic_sign: ||v||_inf = " + std::to_string(inf_norm) +
                          " exceeds R = " + std::to_string(radius));
  }
  BitSignVector out(v.dim());
  for (std::size_t k = 0; k < v.dim(); ++k) {
    const double p_plus = 0.5 + v[k] / (2.0 * radius);
    // One draw per coordinate regardless of p, so the stream position does
    // not depend on the data. p_plus == 1 always yields +1 since u < 1.
    out.set(k, rng.uniform() < p_plus);
  }
  return out;
}

DenseVector project_l2(const DenseVector& v, double radius) {
  require_finite(v, "project_l2");
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw InvalidInput("project_l2: radius must be positive and finite");
  }
  const double norm = norm_l2(v);
  if (norm <= radius) return v;
  DenseVector out = v * (radius / norm);
  // Rounding in the rescale can land a hair outside the ball.
  while (norm_l2(out) > radius) out *= 1.0 - 4.0 * std::numeric_limits<double>::epsilon();
  return out;
}

}  // namespace signvr

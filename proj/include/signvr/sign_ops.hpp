// SPDX-License-Identifier: Apache-2.0
//
// The three sign operators and the l2-ball projection.

#pragma once

#include "signvr/rng.hpp"
#include "signvr/vector.hpp"

namespace signvr {

/// Elementwise sign with sign(0) = 0.
SignVector sign(const DenseVector& v);

/// Elementwise sign with ties sent to +1, for strict 1-bit encodings.
BitSignVector sign_bit(const DenseVector& v);

/// Unbiased randomized sign S_R: coordinate k is +1 with probability
/// 1/2 + v[k]/(2R), so E[out] = v / R.
///
/// Requires ||v||_inf <= R; throws DomainViolation otherwise. The input is
/// never clamped.
BitSignVector stochastic_sign(const DenseVector& v, double radius, RngStream& rng);

/// Euclidean projection onto the ball of radius `radius` centred at 0.
DenseVector project_l2(const DenseVector& v, double radius);

}  // namespace signvr

// SPDX-License-Identifier: Apache-2.0

#include "signvr/vector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "signvr/errors.hpp"

namespace signvr {

namespace {

void check_finite(const std::vector<double>& values) {
  if (values.empty()) throw InvalidInput("DenseVector: dimension must be positive");
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k])) {
      throw InvalidInput("DenseVector: non-finite entry at index " + std::to_string(k));
    }
  }
}

}  // namespace

DenseVector::DenseVector(std::size_t dim, double fill) : values_(dim, fill) {
  check_finite(values_);
}

DenseVector::DenseVector(std::initializer_list<double> values) : values_(values) {
  check_finite(values_);
}

DenseVector::DenseVector(std::vector<double> values) : values_(std::move(values)) {
  check_finite(values_);
}

DenseVector DenseVector::unit(std::size_t dim, std::size_t k) {
  if (k >= dim) throw InvalidInput("DenseVector::unit: index out of range");
  DenseVector e(dim);
  e[k] = 1.0;
  return e;
}

bool DenseVector::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

DenseVector& DenseVector::operator+=(const DenseVector& other) {
  require_same_dim(*this, other, "operator+=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

DenseVector& DenseVector::operator-=(const DenseVector& other) {
  require_same_dim(*this, other, "operator-=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

DenseVector& DenseVector::operator*=(double scale) noexcept {
  for (double& x : values_) x *= scale;
  return *this;
}

DenseVector& DenseVector::axpy(double alpha, const DenseVector& other) {
  require_same_dim(*this, other, "axpy");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += alpha * other.values_[k];
  return *this;
}

void require_same_dim(const DenseVector& a, const DenseVector& b, const char* where) {
  if (a.dim() != b.dim()) {
    throw InvalidInput(std::string(where) + ": dimension mismatch (" + std::to_string(a.dim()) +
                       " vs " + std::to_string(b.dim()) + ")");
  }
}

double dot(const DenseVector& a, const DenseVector& b) {
  require_same_dim(a, b, "dot");
  double s = 0.0;
  for (std::size_t k = 0; k < a.dim(); ++k) s += a[k] * b[k];
  return s;
}

double norm_l1(const DenseVector& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

double norm_l2(const DenseVector& v) {
  // Scaled accumulation keeps huge and tiny entries from over/underflowing.
  const double scale = norm_linf(v);
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (double x : v) {
    const double r = x / scale;
    s += r * r;
  }
  return scale * std::sqrt(s);
}

double norm_linf(const DenseVector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double squared_distance(const DenseVector& a, const DenseVector& b) {
  require_same_dim(a, b, "squared_distance");
  double s = 0.0;
  for (std::size_t k = 0; k < a.dim(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

SignVector::SignVector(std::vector<std::int8_t> values) : values_(std::move(values)) {
  for (auto s : values_) {
    if (s < -1 || s > 1) throw InvalidInput("SignVector: entries must be in {-1, 0, +1}");
  }
}

SignVector::SignVector(std::initializer_list<int> values) {
  values_.reserve(values.size());
  for (int s : values) {
    if (s < -1 || s > 1) throw InvalidInput("SignVector: entries must be in {-1, 0, +1}");
    values_.push_back(static_cast<std::int8_t>(s));
  }
}

std::size_t SignVector::count_zeros() const noexcept {
  return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::int8_t{0}));
}

DenseVector SignVector::to_dense() const {
  std::vector<double> out(values_.begin(), values_.end());
  return DenseVector(std::move(out));
}

BitSignVector::BitSignVector(std::size_t dim) : dim_(dim), bytes_(byte_length(dim), 0) {
  if (dim == 0) throw InvalidInput("BitSignVector: dimension must be positive");
}

BitSignVector BitSignVector::from_bytes(std::size_t dim, std::vector<std::uint8_t> bytes) {
  if (dim == 0) throw InvalidInput("BitSignVector: dimension must be positive");
  if (bytes.size() != byte_length(dim)) {
    throw InvalidInput("BitSignVector: payload is " + std::to_string(bytes.size()) +
                       " bytes, expected " + std::to_string(byte_length(dim)));
  }
  if (const std::size_t used = dim % 8; used != 0) {
    const auto pad_mask = static_cast<std::uint8_t>(0xFFu << used);
    if (bytes.back() & pad_mask) throw InvalidInput("BitSignVector: pad bits must be zero");
  }
  BitSignVector out;
  out.dim_ = dim;
  out.bytes_ = std::move(bytes);
  return out;
}

BitSignVector BitSignVector::from_signs(std::span<const std::int8_t> signs) {
  BitSignVector out(signs.size());
  for (std::size_t k = 0; k < signs.size(); ++k) {
    if (signs[k] == 1) {
      out.set(k, true);
    } else if (signs[k] != -1) {
      throw InvalidInput("BitSignVector::from_signs: entries must be -1 or +1");
    }
  }
  return out;
}

SignVector BitSignVector::to_signs() const {
  std::vector<std::int8_t> out(dim_);
  for (std::size_t k = 0; k < dim_; ++k) out[k] = static_cast<std::int8_t>(get(k));
  return SignVector(std::move(out));
}

DenseVector BitSignVector::to_dense() const {
  std::vector<double> out(dim_);
  for (std::size_t k = 0; k < dim_; ++k) out[k] = get(k);
  return DenseVector(std::move(out));
}

}  // namespace signvr

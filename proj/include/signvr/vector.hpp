// SPDX-License-Identifier: Apache-2.0
//
// Dense real vectors, sign vectors, and the bit-packed 1-bit sign encoding.

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace signvr {

/// Real d-vector used for iterates and gradient estimates.
///
/// Construction from external data checks that every entry is finite and
/// that d >= 1. Arithmetic does not re-check; callers that need the
/// invariant after a long recursion call `all_finite()`.
class DenseVector {
public:
  DenseVector() = default;
  explicit DenseVector(std::size_t dim, double fill = 0.0);
  DenseVector(std::initializer_list<double> values);
  explicit DenseVector(std::vector<double> values);

  static DenseVector zeros(std::size_t dim) { return DenseVector(dim, 0.0); }
  static DenseVector unit(std::size_t dim, std::size_t k);

  std::size_t dim() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator[](std::size_t k) noexcept { return values_[k]; }
  double operator[](std::size_t k) const noexcept { return values_[k]; }

  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  bool all_finite() const noexcept;

  DenseVector& operator+=(const DenseVector& other);
  DenseVector& operator-=(const DenseVector& other);
  DenseVector& operator*=(double scale) noexcept;
  /// this += alpha * other
  DenseVector& axpy(double alpha, const DenseVector& other);

  friend DenseVector operator+(DenseVector a, const DenseVector& b) { return a += b; }
  friend DenseVector operator-(DenseVector a, const DenseVector& b) { return a -= b; }
  friend DenseVector operator*(double s, DenseVector a) { return a *= s; }
  friend DenseVector operator*(DenseVector a, double s) { return a *= s; }
  friend bool operator==(const DenseVector&, const DenseVector&) = default;

private:
  std::vector<double> values_;
};

/// Throws InvalidInput unless a and b have the same dimension.
void require_same_dim(const DenseVector& a, const DenseVector& b, const char* where);

double dot(const DenseVector& a, const DenseVector& b);
double norm_l1(const DenseVector& v);
double norm_l2(const DenseVector& v);
double norm_linf(const DenseVector& v);
double squared_distance(const DenseVector& a, const DenseVector& b);

/// Ternary sign vector with entries in {-1, 0, +1}.
class SignVector {
public:
  SignVector() = default;
  explicit SignVector(std::vector<std::int8_t> values);
  SignVector(std::initializer_list<int> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::int8_t operator[](std::size_t k) const noexcept { return values_[k]; }
  std::span<const std::int8_t> span() const noexcept { return values_; }
  std::size_t count_zeros() const noexcept;

  DenseVector to_dense() const;

  friend bool operator==(const SignVector&, const SignVector&) = default;

private:
  std::vector<std::int8_t> values_;
};

/// Strict +-1 vector packed one bit per coordinate.
///
/// Coordinate k lives at byte k/8, bit k%8 (least significant bit first);
/// bit 1 means +1, bit 0 means -1. Pad bits in the last byte are zero.
class BitSignVector {
public:
  BitSignVector() = default;
  /// All coordinates -1.
  explicit BitSignVector(std::size_t dim);

  /// Validates length == ceil(dim/8) and zero pad bits.
  static BitSignVector from_bytes(std::size_t dim, std::vector<std::uint8_t> bytes);
  /// Every entry must be -1 or +1.
  static BitSignVector from_signs(std::span<const std::int8_t> signs);
  static BitSignVector from_signs(const SignVector& signs) { return from_signs(signs.span()); }

  static std::size_t byte_length(std::size_t dim) noexcept { return (dim + 7) / 8; }

  std::size_t dim() const noexcept { return dim_; }
  std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }

  /// +1 or -1.
  int get(std::size_t k) const noexcept {
    return ((bytes_[k >> 3] >> (k & 7)) & 1u) ? 1 : -1;
  }
  bool is_plus(std::size_t k) const noexcept { return (bytes_[k >> 3] >> (k & 7)) & 1u; }
  void set(std::size_t k, bool plus) noexcept {
    const auto mask = static_cast<std::uint8_t>(1u << (k & 7));
    if (plus) {
      bytes_[k >> 3] |= mask;
    } else {
      bytes_[k >> 3] &= static_cast<std::uint8_t>(~mask);
    }
  }

  SignVector to_signs() const;
  DenseVector to_dense() const;

  friend bool operator==(const BitSignVector&, const BitSignVector&) = default;

private:
  std::size_t dim_ = 0;
  std::vector<std::uint8_t> bytes_;
};

}  // namespace signvr

#pragma once

#include <cstdint>
#include <string>

#include "pathsample/linalg.hpp"

namespace pathsample {

/// Nonnegative real stored as mantissa * 2^exponent with mantissa in [1, 2),
/// or exact zero. Products of hundreds of layer norms stay representable.
class LogScaled {
 public:
  LogScaled() = default;

  static LogScaled from_double(double value);
  static LogScaled from_log2(double log2_value);
  static LogScaled zero() { return {}; }

  double mantissa() const noexcept { return mantissa_; }
  std::int64_t exponent() const noexcept { return exponent_; }
  bool is_zero() const noexcept { return mantissa_ == 0.0; }

  /// Nearest double; +inf on overflow, 0 on underflow.
  double to_double() const noexcept;
  /// -inf for zero.
  double log2() const noexcept;
  double log10() const noexcept;
  double ln() const noexcept;

  LogScaled pow(double p) const;

  LogScaled& operator*=(const LogScaled& other);
  LogScaled& operator/=(const LogScaled& other);
  LogScaled& operator+=(const LogScaled& other);

  friend LogScaled operator*(LogScaled a, const LogScaled& b) { return a *= b; }
  friend LogScaled operator/(LogScaled a, const LogScaled& b) { return a /= b; }
  friend LogScaled operator+(LogScaled a, const LogScaled& b) { return a += b; }

  friend bool operator==(const LogScaled& a, const LogScaled& b) noexcept {
    return a.mantissa_ == b.mantissa_ && (a.is_zero() || a.exponent_ == b.exponent_);
  }
  friend bool operator<(const LogScaled& a, const LogScaled& b) noexcept;
  friend bool operator<=(const LogScaled& a, const LogScaled& b) noexcept {
    return !(b < a);
  }

  std::string to_string() const;

 private:
  LogScaled(double mantissa, std::int64_t exponent)
      : mantissa_(mantissa), exponent_(exponent) {}
  void normalize();

  double mantissa_ = 0.0;
  std::int64_t exponent_ = 0;
};

/// Nonnegative vector sharing one base-2 exponent: entry i is values[i] * 2^exponent.
/// After normalize() the largest entry lies in [0.5, 1).
struct ScaledVector {
  Vector values;
  std::int64_t exponent = 0;

  void normalize();
  LogScaled at(Eigen::Index i) const;
  LogScaled sum() const;
  /// Renders to doubles; throws numeric error on overflow.
  Vector render() const;
};

/// Nonnegative matrix sharing one base-2 exponent.
struct ScaledMatrix {
  Matrix values;
  std::int64_t exponent = 0;

  void normalize();
  Matrix render() const;
};

}  // namespace pathsample

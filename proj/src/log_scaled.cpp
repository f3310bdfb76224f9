#include "pathsample/log_scaled.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "pathsample/error.hpp"

namespace pathsample {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::non_finite: return "non-finite";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::guard: return "guard";
    case ErrorKind::format: return "format";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

void LogScaled::normalize() {
  if (mantissa_ == 0.0) {
    exponent_ = 0;
    return;
  }
  int e = 0;
  const double f = std::frexp(mantissa_, &e);
  mantissa_ = 2.0 * f;
  exponent_ += e - 1;
}

LogScaled LogScaled::from_double(double value) {
  require(std::isfinite(value) && value >= 0.0, ErrorKind::precondition,
          "LogScaled requires a finite nonnegative value");
  LogScaled out(value, 0);
  out.normalize();
  return out;
}

LogScaled LogScaled::from_log2(double log2_value) {
  if (log2_value == -std::numeric_limits<double>::infinity()) return {};
  require(std::isfinite(log2_value), ErrorKind::numeric, "LogScaled from non-finite log2");
  const double whole = std::floor(log2_value);
  LogScaled out(std::exp2(log2_value - whole), static_cast<std::int64_t>(whole));
  out.normalize();
  return out;
}

double LogScaled::to_double() const noexcept {
  if (is_zero()) return 0.0;
  if (exponent_ > 1100) return std::numeric_limits<double>::infinity();
  if (exponent_ < -1100) return 0.0;
  return std::ldexp(mantissa_, static_cast<int>(exponent_));
}

double LogScaled::log2() const noexcept {
  if (is_zero()) return -std::numeric_limits<double>::infinity();
  return std::log2(mantissa_) + static_cast<double>(exponent_);
}

double LogScaled::log10() const noexcept { return log2() * std::log10(2.0); }

double LogScaled::ln() const noexcept { return log2() * std::log(2.0); }

LogScaled LogScaled::pow(double p) const {
  if (is_zero()) return p == 0.0 ? from_double(1.0) : LogScaled{};
  return from_log2(p * log2());
}

LogScaled& LogScaled::operator*=(const LogScaled& other) {
  if (is_zero() || other.is_zero()) {
    *this = {};
    return *this;
  }
  mantissa_ *= other.mantissa_;
  exponent_ += other.exponent_;
  normalize();
  return *this;
}

LogScaled& LogScaled::operator/=(const LogScaled& other) {
  require(!other.is_zero(), ErrorKind::numeric, "LogScaled division by zero");
  if (is_zero()) return *this;
  mantissa_ /= other.mantissa_;
  exponent_ -= other.exponent_;
  normalize();
  return *this;
}

LogScaled& LogScaled::operator+=(const LogScaled& other) {
  if (other.is_zero()) return *this;
  if (is_zero()) {
    *this = other;
    return *this;
  }
  const std::int64_t top = std::max(exponent_, other.exponent_);
  const auto shifted = [top](const LogScaled& v) {
    const std::int64_t gap = top - v.exponent_;
    return gap > 1100 ? 0.0 : std::ldexp(v.mantissa_, -static_cast<int>(gap));
  };
  mantissa_ = shifted(*this) + shifted(other);
  exponent_ = top;
  normalize();
  return *this;
}

bool operator<(const LogScaled& a, const LogScaled& b) noexcept {
  if (a.is_zero()) return !b.is_zero();
  if (b.is_zero()) return false;
  if (a.exponent_ != b.exponent_) return a.exponent_ < b.exponent_;
  return a.mantissa_ < b.mantissa_;
}

std::string LogScaled::to_string() const {
  const double v = to_double();
  char buf[64];
  if (std::isfinite(v) && v != 0.0) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
  } else if (is_zero()) {
    std::snprintf(buf, sizeof buf, "0");
  } else {
    std::snprintf(buf, sizeof buf, "2^%.15g", log2());
  }
  return buf;
}

namespace {

std::int64_t normalizing_shift(double max_entry) {
  if (max_entry == 0.0 || !std::isfinite(max_entry)) return 0;
  int e = 0;
  std::frexp(max_entry, &e);
  return e;
}

}  // namespace

void ScaledVector::normalize() {
  const double top = values.size() ? values.maxCoeff() : 0.0;
  const std::int64_t shift = normalizing_shift(top);
  if (shift == 0) return;
  values = (values.array() * std::ldexp(1.0, -static_cast<int>(shift))).matrix();
  exponent += shift;
}

LogScaled ScaledVector::at(Eigen::Index i) const {
  return LogScaled::from_double(values[i]) * LogScaled::from_log2(static_cast<double>(exponent));
}

LogScaled ScaledVector::sum() const {
  return LogScaled::from_double(values.sum()) *
         LogScaled::from_log2(static_cast<double>(exponent));
}

Vector ScaledVector::render() const {
  Vector out(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = at(i).to_double();
    require(std::isfinite(v), ErrorKind::numeric, "scaled vector overflows double range");
    out[i] = v;
  }
  return out;
}

void ScaledMatrix::normalize() {
  const double top = values.size() ? values.maxCoeff() : 0.0;
  const std::int64_t shift = normalizing_shift(top);
  if (shift == 0) return;
  values *= std::ldexp(1.0, -static_cast<int>(shift));
  exponent += shift;
}

Matrix ScaledMatrix::render() const {
  const double top = values.size() ? values.maxCoeff() : 0.0;
  if (top == 0.0) return values;
  const double log2_top = std::log2(top) + static_cast<double>(exponent);
  require(log2_top < 1023.0, ErrorKind::numeric,
          "matrix product exceeds double range (log2 = " + std::to_string(log2_top) + ")");
  Matrix out = values;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out.data()[i] = std::ldexp(out.data()[i], static_cast<int>(exponent));
  }
  return out;
}

}  // namespace pathsample

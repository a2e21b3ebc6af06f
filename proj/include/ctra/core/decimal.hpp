#pragma once

#include <boost/multiprecision/cpp_dec_float.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ctra {

/// Exact base-10 number with 50 significant digits; stands in for NUMERIC.
class Decimal {
 public:
  using Rep = boost::multiprecision::cpp_dec_float_50;

  Decimal() = default;
  explicit Decimal(std::int64_t v) : v_(v) {}
  explicit Decimal(Rep v) : v_(std::move(v)) {}

  /// Strict numeric literal: optional sign, digits, optional fraction, optional exponent.
  /// Leading/trailing ASCII whitespace is tolerated (PostgreSQL input semantics).
  static std::optional<Decimal> parse(std::string_view text);

  /// Micros to seconds without rounding.
  static Decimal from_micros(std::int64_t micros);

  /// Canonical text: fixed notation, at most `max_fraction` digits (rounded half away
  /// from zero), trailing zeros trimmed, no "-0".
  std::string to_string(int max_fraction = 12) const;
  /// Fixed notation with exactly `fraction` digits.
  std::string to_fixed(int fraction) const;

  double to_double() const { return v_.convert_to<double>(); }
  const Rep& rep() const { return v_; }
  bool is_zero() const { return v_.is_zero(); }

  friend Decimal operator+(const Decimal& a, const Decimal& b) { return Decimal(Rep(a.v_ + b.v_)); }
  friend Decimal operator-(const Decimal& a, const Decimal& b) { return Decimal(Rep(a.v_ - b.v_)); }
  friend Decimal operator*(const Decimal& a, const Decimal& b) { return Decimal(Rep(a.v_ * b.v_)); }
  /// Caller checks for a zero divisor.
  friend Decimal operator/(const Decimal& a, const Decimal& b) { return Decimal(Rep(a.v_ / b.v_)); }
  Decimal operator-() const { return Decimal(Rep(-v_)); }
  Decimal& operator+=(const Decimal& o) {
    v_ += o.v_;
    return *this;
  }

  friend bool operator==(const Decimal& a, const Decimal& b) { return a.v_ == b.v_; }
  friend bool operator<(const Decimal& a, const Decimal& b) { return a.v_ < b.v_; }
  friend bool operator>(const Decimal& a, const Decimal& b) { return b.v_ < a.v_; }
  friend bool operator<=(const Decimal& a, const Decimal& b) { return !(b.v_ < a.v_); }
  friend bool operator>=(const Decimal& a, const Decimal& b) { return !(a.v_ < b.v_); }

 private:
  Rep v_{0};
};

}  // namespace ctra

#pragma once

#include "symx/symtype.hpp"

#include <gmpxx.h>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace symx {

/// Numeric coefficient: an exact normalized rational or an inexact float64.
/// Exact op exact stays exact; any inexact operand makes the result inexact.
class Constant {
 public:
  Constant() : value_(Small{0, 1}) {}
  Constant(long value) : value_(Small{value, 1}) {}  // NOLINT(google-explicit-constructor)
  Constant(int value) : value_(Small{value, 1}) {}   // NOLINT(google-explicit-constructor)
  explicit Constant(mpq_class value);
  explicit Constant(double value) : value_(value) {}

  static Constant rational(long num, long den);
  /// Parses a decimal integer, an exact "p/q", or a float literal (anything with '.', 'e').
  static Constant parse(const std::string& text);

  bool is_exact() const { return !std::holds_alternative<double>(value_); }
  mpq_class exact() const;
  double inexact() const { return std::get<double>(value_); }

  bool is_zero() const;
  bool is_one() const;
  bool is_minus_one() const;
  bool is_negative() const;
  /// Exact integer, or an inexact value with an integral finite value.
  bool is_integer() const;
  bool is_exact_integer() const;
  std::optional<long> to_long() const;
  double to_double() const;

  SymType symtype() const;

  Constant operator-() const;
  friend Constant operator+(const Constant& a, const Constant& b);
  friend Constant operator-(const Constant& a, const Constant& b);
  friend Constant operator*(const Constant& a, const Constant& b);
  /// Throws DomainError on exact division by zero.
  friend Constant operator/(const Constant& a, const Constant& b);
  Constant abs() const;

  /// Folded power, or nullopt when the result cannot be represented (exact base
  /// with non-integer exact exponent). Throws DomainError for exact 0^0 and 0^-n.
  static std::optional<Constant> pow(const Constant& base, const Constant& exponent);

  /// Total order: by numeric value, then exact before inexact. NaN sorts last.
  friend std::strong_ordering compare(const Constant& a, const Constant& b);
  /// Structural equality: same tag and same value (-0.0 equals 0.0, NaN equals NaN).
  friend bool operator==(const Constant& a, const Constant& b);

  std::size_t hash() const;
  /// Round-trippable text: "3", "-2/3", "1.5", "2.0".
  std::string str() const;

 private:
  // Exact values whose numerator and denominator fit in 64 bits are always Small.
  struct Small {
    std::int64_t num;
    std::int64_t den;  // positive, coprime with num
  };
  static Constant from_mpq(const mpq_class& q);
  static std::optional<Constant> from_wide(__int128 num, __int128 den);
  const Small* small() const { return std::get_if<Small>(&value_); }

  std::variant<Small, mpq_class, double> value_;
};

}  // namespace symx

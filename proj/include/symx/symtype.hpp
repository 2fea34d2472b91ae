#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace symx {

/// Symbolic type of a term: the type it would have if evaluated.
/// Numeric kinds form the chain Bool <= Integer <= Rational <= Real <= Complex <= Number.
class SymType {
 public:
  enum class Kind { Bool, Integer, Rational, Real, Complex, Number, Uninterpreted };

  SymType() = default;
  SymType(Kind kind) : kind_(kind) {}  // NOLINT(google-explicit-constructor)

  static SymType uninterpreted(std::string name);

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }

  /// Integer through Number. Bool is deliberately not numeric for arithmetic.
  bool is_numeric() const { return kind_ != Kind::Bool && kind_ != Kind::Uninterpreted; }

  /// Partial order of the chain; uninterpreted types only compare equal to themselves.
  bool is_subtype_of(const SymType& other) const;

  std::string str() const;

  bool operator==(const SymType& other) const = default;

 private:
  Kind kind_ = Kind::Number;
  std::string name_;
};

/// Least upper bound for arithmetic operators. Throws TypeError for Bool or uninterpreted operands.
SymType join(const SymType& a, const SymType& b);

/// Parses "Real", "Integer", ...; any other identifier yields an uninterpreted type.
SymType parse_symtype(std::string_view text);

}  // namespace symx

#include "symx/symtype.hpp"

#include "symx/error.hpp"

#include <utility>

namespace symx {

SymType SymType::uninterpreted(std::string name) {
  SymType t(Kind::Uninterpreted);
  t.name_ = std::move(name);
  return t;
}

bool SymType::is_subtype_of(const SymType& other) const {
  if (kind_ == Kind::Uninterpreted || other.kind_ == Kind::Uninterpreted) return *this == other;
  return static_cast<int>(kind_) <= static_cast<int>(other.kind_);
}

std::string SymType::str() const {
  switch (kind_) {
    case Kind::Bool: return "Bool";
    case Kind::Integer: return "Integer";
    case Kind::Rational: return "Rational";
    case Kind::Real: return "Real";
    case Kind::Complex: return "Complex";
    case Kind::Number: return "Number";
    case Kind::Uninterpreted: return name_;
  }
  return "?";
}

SymType join(const SymType& a, const SymType& b) {
  if (!a.is_numeric() || !b.is_numeric()) {
    throw TypeError("arithmetic is not defined on symtype " + (a.is_numeric() ? b : a).str());
  }
  return static_cast<int>(a.kind()) >= static_cast<int>(b.kind()) ? a : b;
}

SymType parse_symtype(std::string_view text) {
  using K = SymType::Kind;
  if (text == "Bool") return K::Bool;
  if (text == "Integer") return K::Integer;
  if (text == "Rational") return K::Rational;
  if (text == "Real") return K::Real;
  if (text == "Complex") return K::Complex;
  if (text == "Number") return K::Number;
  return SymType::uninterpreted(std::string(text));
}

}  // namespace symx

#pragma once

#include "symx/symtype.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace symx {

enum class Prim { Add, Mul, Sub, Div, Pow, Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Min, Max, User };

struct OpInfo {
  std::string name;
  int min_arity = 0;
  int max_arity = 0;  // -1: variadic
  Prim prim = Prim::User;
  SymType result;     // only meaningful for Prim::User
  bool commutative = false;
};

/// Interned operator handle. Two handles are equal iff they name the same operator.
class OpId {
 public:
  OpId() = default;

  static OpId add();
  static OpId mul();
  static OpId sub();
  static OpId div();
  static OpId pow();
  static OpId of(Prim prim);

  /// Looks up a primitive or a previously declared function.
  static std::optional<OpId> find(std::string_view name);
  /// Registers an uninterpreted function. Re-declaring with the same signature returns
  /// the existing handle; a conflicting signature or a primitive name throws.
  static OpId declare(const std::string& name, int arity, SymType result = SymType::Kind::Number);

  bool valid() const { return info_ != nullptr; }
  const std::string& name() const { return info_->name; }
  Prim prim() const { return info_->prim; }
  const OpInfo& info() const { return *info_; }
  bool commutative() const { return info_->commutative; }
  bool accepts_arity(std::size_t n) const;
  /// +, *, -, / and ^: the operators with canonical constructors.
  bool is_arithmetic() const;

  bool operator==(const OpId& other) const { return info_ == other.info_; }

 private:
  explicit OpId(const OpInfo* info) : info_(info) {}
  const OpInfo* info_ = nullptr;
};

}  // namespace symx

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace symx {

/// Untyped parse tree shared by expression, pattern and rule parsing.
struct SyntaxNode {
  enum class Kind { Number, Ident, Slot, Call, Binary, Negate };

  Kind kind = Kind::Number;
  std::string text;  // literal text, identifier, slot name, callee, or operator
  std::vector<SyntaxNode> children;
  std::size_t line = 1;
  std::size_t column = 1;
};

/// Infix grammar, loosest to tightest: + -, * /, unary -, ^ (right associative).
/// Calls are f(a, b). Slots (~name) are accepted only when allow_slots is set.
/// Throws ParseError with the 1-based line and column of the offending token.
SyntaxNode parse_syntax(std::string_view text, bool allow_slots = false);

}  // namespace symx

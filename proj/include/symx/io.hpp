#pragma once

#include "symx/syntax.hpp"
#include "symx/term.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace symx {

/// Symbol and function declarations visible to the parser.
class Decls {
 public:
  enum class Mode {
    Strict,    // undeclared identifiers are errors
    Implicit,  // undeclared symbols become Number, unknown calls declare Number-valued functions
  };

  explicit Decls(Mode mode = Mode::Strict) : mode_(mode) {}

  Term declare_symbol(const std::string& name, SymType type = SymType::Kind::Number);
  OpId declare_function(const std::string& name, int arity, SymType result = SymType::Kind::Number);

  std::optional<Term> symbol(std::string_view name) const;
  /// Primitive, or a function declared through this table (or implicitly in Implicit mode).
  std::optional<OpId> function(std::string_view name, std::size_t arity);
  Mode mode() const { return mode_; }
  const std::map<std::string, Term, std::less<>>& symbols() const { return symbols_; }

 private:
  Mode mode_;
  std::map<std::string, Term, std::less<>> symbols_;
  std::set<std::string, std::less<>> functions_;
};

struct ParseOptions {
  /// When false, arithmetic builds raw App nodes with no constructor simplification.
  bool fold = true;
};

/// Builds a term from a parse tree (slots rejected).
Term to_term(const SyntaxNode& node, Decls& decls, ParseOptions options = {});
Term parse_expr(std::string_view text, Decls& decls, ParseOptions options = {});
/// Convenience for tests and tools: implicit declarations.
Term parse_expr(std::string_view text);

/// Minimal-parentheses infix rendering. parse_expr(print_expr(t)) == t for canonical t
/// whose symbols are declared with their symtypes.
std::string print_expr(const Term& t);

/// `syms a::Real b` / `funcs f/2 g/1::Real` header lines followed by expressions.
/// An expression continues onto the next line while parentheses are open or the
/// line ends in a binary operator. `#` starts a comment.
struct SourceFile {
  Decls decls{Decls::Mode::Strict};
  std::vector<Term> exprs;
};

SourceFile parse_source(std::string_view text, ParseOptions options = {});
SourceFile load_source(const std::string& path, ParseOptions options = {});

/// Reads a whole UTF-8 text file; throws Error when it cannot be opened.
std::string read_file(const std::string& path);

}  // namespace symx

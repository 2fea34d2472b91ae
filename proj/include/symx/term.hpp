#pragma once

#include "symx/constant.hpp"
#include "symx/op.hpp"
#include "symx/symtype.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace symx {

class Term;

namespace detail {
struct TermNode;
}

using Entry = std::pair<Term, Constant>;

/// Immutable, freely shareable expression node. Equality is structural; the
/// structural hash is computed once at construction.
///
/// Kinds:
///  - Constant, Symbol: leaves.
///  - Add: coeff + sum(c_i * t_i), entries keyed by term (canonical key order).
///  - Mul: coeff * prod(b_i ^ e_i), entries keyed by base.
///  - Pow: base ^ exponent where the exponent is not reducible into a Mul map.
///  - App: operator applied to an ordered argument list, with no simplification.
class Term {
 public:
  enum class Kind : std::uint8_t { Constant, Symbol, Add, Mul, Pow, App };

  Term();  // exact 0
  Term(const Constant& c);  // NOLINT(google-explicit-constructor)
  Term(int value) : Term(Constant(value)) {}  // NOLINT(google-explicit-constructor)
  Term(long value) : Term(Constant(value)) {}  // NOLINT(google-explicit-constructor)
  Term(double value) : Term(Constant(value)) {}  // NOLINT(google-explicit-constructor)

  Kind kind() const;
  bool is_constant() const { return kind() == Kind::Constant; }
  bool is_symbol() const { return kind() == Kind::Symbol; }
  bool is_add() const { return kind() == Kind::Add; }
  bool is_mul() const { return kind() == Kind::Mul; }
  bool is_pow() const { return kind() == Kind::Pow; }
  bool is_app() const { return kind() == Kind::App; }
  /// An App whose operator has a canonical constructor (built with folding disabled).
  bool is_raw_arithmetic() const;

  const SymType& symtype() const;
  std::size_t hash() const;

  const Constant& value() const;          // Constant
  const std::string& name() const;        // Symbol
  const Constant& coeff() const;          // Add, Mul
  std::span<const Entry> entries() const;  // Add, Mul
  const Term& base() const;               // Pow
  const Term& exponent() const;           // Pow
  OpId op() const;                        // App
  std::span<const Term> args() const;     // App

  bool same_node(const Term& other) const { return node_ == other.node_; }

  friend bool operator==(const Term& a, const Term& b);
  /// The canonical total ordering: constants < symbols < composites.
  friend std::strong_ordering operator<=>(const Term& a, const Term& b);

 private:
  friend struct TermFactory;
  explicit Term(std::shared_ptr<const detail::TermNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const detail::TermNode> node_;
};

struct TermHash {
  std::size_t operator()(const Term& t) const { return t.hash(); }
};

// ---- the generic term interface -------------------------------------------

bool is_tree(const Term& t);
/// Head of a composite term. Throws ContractError on leaves.
OpId operation(const Term& t);
/// Argument list in canonical order (deterministic). Throws ContractError on leaves.
/// Add yields [coeff if != 0] ++ [c_i * t_i]; Mul yields [coeff if != 1] ++ [b_i ^ e_i],
/// each sorted by key.
const std::vector<Term>& arguments(const Term& t);
const SymType& symtype(const Term& t);
/// Builds a term of the same flavour as `like` (raw arithmetic stays raw, anything
/// else routes through the canonical constructors). An explicit symtype overrides
/// inference for App results.
Term similar_term(const Term& like, OpId op, std::span<const Term> args,
                  std::optional<SymType> type = std::nullopt);

// ---- construction ------------------------------------------------------------

/// Validates the identifier (letter, then letters, digits, underscores).
Term make_symbol(std::string_view name, SymType type = SymType::Kind::Number);
Term make_constant(const Constant& value);
/// Raw application, no simplification. Checks arity only.
Term make_app(OpId op, std::vector<Term> args, std::optional<SymType> type = std::nullopt);

Term add_terms(std::span<const Term> args);
Term mul_terms(std::span<const Term> args);
Term pow_terms(const Term& base, const Term& exponent);
/// Canonical construction for any operator: +, *, ^ through the canonical forms,
/// a - b as a + (-1)*b, a / b as a * b^-1, everything else as App.
Term build(OpId op, std::span<const Term> args, std::optional<SymType> type = std::nullopt);
/// Rebuilds every raw arithmetic App bottom-up through the canonical constructors.
Term canonicalize(const Term& t);

Term operator+(const Term& a, const Term& b);
Term operator-(const Term& a, const Term& b);
Term operator*(const Term& a, const Term& b);
Term operator/(const Term& a, const Term& b);
Term operator-(const Term& a);
Term pow(const Term& base, const Term& exponent);
Term apply(Prim prim, std::vector<Term> args);
Term sin(const Term& t);
Term cos(const Term& t);
Term tan(const Term& t);
Term exp(const Term& t);
Term log(const Term& t);
Term sqrt(const Term& t);

/// Number of nodes reached through is_tree/arguments recursion.
std::size_t node_count(const Term& t);
/// Depth counting leaves as depth 1.
std::size_t depth(const Term& t);

namespace detail {

struct TermNode {
  Term::Kind kind = Term::Kind::Constant;
  SymType type;
  std::size_t hash = 0;
  Constant constant;           // Constant value, or Add/Mul coefficient
  std::string name;            // Symbol
  std::vector<Entry> entries;  // Add/Mul
  OpId op;                     // App
  std::vector<Term> args;      // App args, Pow [base, exponent]

  mutable std::once_flag arguments_once;
  mutable std::vector<Term> arguments_cache;
};

}  // namespace detail

}  // namespace symx

template <>
struct std::hash<symx::Term> {
  std::size_t operator()(const symx::Term& t) const { return t.hash(); }
};

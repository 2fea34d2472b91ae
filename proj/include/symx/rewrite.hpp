#pragma once

#include "symx/term.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace symx {

/// Restriction attached to a slot in a rule's `where` clause.
struct SlotPredicate {
  enum class Kind {
    IsConstant,  // ~c::Constant
    TypeBound,   // ~x::Real  (symtype <= bound)
    IntRange,    // ~n in 2..8  (exact integer constant in [lo, hi])
  };
  Kind kind = Kind::IsConstant;
  SymType bound = SymType::Kind::Number;
  long lo = 0;
  long hi = 0;

  bool test(const Term& t) const;
  std::string str() const;
};

using Predicates = std::map<std::string, std::vector<SlotPredicate>, std::less<>>;

/// Parses `~x::Constant`, `~x::Real` or `~n in 2..8` (leading `~` optional).
std::pair<std::string, SlotPredicate> parse_slot_predicate(std::string_view text);

/// Pattern over the term interface. Literal symbols match by name.
struct Pattern {
  enum class Kind { Slot, Literal, Node };

  Kind kind = Kind::Literal;
  std::string slot;
  std::vector<SlotPredicate> predicates;
  Term literal;
  OpId op;
  std::vector<Pattern> args;

  static Pattern make_slot(std::string name, std::vector<SlotPredicate> preds = {});
  static Pattern make_literal(Term value);
  static Pattern make_node(OpId op, std::vector<Pattern> args);

  std::vector<std::string> slots() const;  // first-occurrence order
  std::string str() const;
};

enum class PatternStyle {
  /// Shaped like canonical terms: + and * flatten, a-b is a + -1*b, a/b is a*b^-1, -a is -1*a.
  Canonical,
  /// Kept exactly as written with binary operators; used on e-graphs.
  Binary,
};

/// Parses a pattern under the expression grammar extended with ~slots.
/// Unknown function names are declared as uninterpreted Number-valued functions.
Pattern parse_pattern(std::string_view text, PatternStyle style = PatternStyle::Canonical,
                      const Predicates& predicates = {});

using Bindings = std::map<std::string, Term, std::less<>>;

/// Upper bound on argument count for the commutative permutation retry.
inline constexpr std::size_t kCommutativeRetryLimit = 8;

/// First match in deterministic search order.
std::optional<Bindings> match(const Pattern& p, const Term& t);
/// Every match, in search order (duplicates removed).
std::vector<Bindings> match_all(const Pattern& p, const Term& t);

/// Builds a canonical term from a template; throws ContractError on an unbound slot.
Term instantiate(const Pattern& templ, const Bindings& b);

struct Rule {
  std::string name;
  Pattern lhs;
  Pattern rhs;
};

/// Throws Error naming the slot when rhs references a slot lhs does not bind.
Rule compile_rule(std::string_view lhs, std::string_view rhs, const Predicates& predicates = {},
                  PatternStyle style = PatternStyle::Canonical, std::string name = {});

std::optional<Term> apply_rule(const Rule& r, const Term& t);

/// One line of a rule file: `name: LHS => RHS [where ~x::Type, ...]`, or `<=>` for both directions.
struct RuleText {
  std::string name;
  std::string lhs;
  std::string rhs;
  Predicates predicates;
  bool bidirectional = false;
  std::size_t line = 0;
};

std::vector<RuleText> parse_rule_text(std::string_view text);
/// Compiles rule text; a bidirectional entry yields two rules (`name` and `name-rev`).
std::vector<Rule> compile_rules(const std::vector<RuleText>& texts, PatternStyle style = PatternStyle::Canonical);
std::vector<Rule> load_rules(std::string_view text, PatternStyle style = PatternStyle::Canonical);

// ---- combinators -------------------------------------------------------------------------

using TermPredicate = std::function<bool(const Term&)>;

/// Pure term-to-term function. Returning the input itself means "no change".
class Rewriter {
 public:
  Rewriter();  // identity

  Term operator()(const Term& t) const;

  static Rewriter identity();
  static Rewriter rule(Rule r);
  static Rewriter function(std::string name, std::function<Term(const Term&)> fn);
  static Rewriter chain(std::vector<Rewriter> rs);
  static Rewriter if_else(TermPredicate cond, Rewriter then, Rewriter els);
  static Rewriter prewalk(Rewriter inner);
  static Rewriter postwalk(Rewriter inner);
  static Rewriter fixpoint(Rewriter inner, std::size_t max_iters);

  std::string describe() const;

  struct Impl;

 private:
  explicit Rewriter(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

/// Succeeds when the rewriter changes the term.
TermPredicate changes(Rewriter r);

struct FixpointResult {
  Term term;
  std::size_t iterations = 0;
  bool converged = false;
};

FixpointResult run_fixpoint(const Rewriter& r, const Term& t, std::size_t max_iters);

// ---- shipped ruleset ---------------------------------------------------------------------

/// Rule-file text of the shipped number-simplification rules.
std::string_view default_rule_text();
std::vector<Rule> default_rules();
/// Built-in function rewriters run alongside the text rules (raw-node folding).
std::vector<Rewriter> builtin_rewriters();
/// fixpoint(postwalk(chain(builtins ++ rules))).
Rewriter make_simplifier(const std::vector<Rule>& rules, std::size_t max_iters = 32);
Term default_simplify(const Term& t);

}  // namespace symx

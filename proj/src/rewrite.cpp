#include "symx/rewrite.hpp"

#include "symx/error.hpp"
#include "symx/syntax.hpp"

#include <algorithm>
#include <numeric>
#include <regex>
#include <set>
#include <sstream>

namespace symx {

// ---- slot predicates ---------------------------------------------------------------------

bool SlotPredicate::test(const Term& t) const {
  switch (kind) {
    case Kind::IsConstant: return t.is_constant();
    case Kind::TypeBound: return t.symtype().is_subtype_of(bound);
    case Kind::IntRange: {
      if (!t.is_constant() || !t.value().is_exact_integer()) return false;
      const auto v = t.value().to_long();
      return v && *v >= lo && *v <= hi;
    }
  }
  return false;
}

std::string SlotPredicate::str() const {
  switch (kind) {
    case Kind::IsConstant: return "::Constant";
    case Kind::TypeBound: return "::" + bound.str();
    case Kind::IntRange: return " in " + std::to_string(lo) + ".." + std::to_string(hi);
  }
  return {};
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::pair<std::string, SlotPredicate> parse_slot_predicate(std::string_view text) {
  std::string s = trim(text);
  if (!s.empty() && s.front() == '~') s.erase(0, 1);
  SlotPredicate p;
  if (auto pos = s.find("::"); pos != std::string::npos) {
    const std::string name = trim(s.substr(0, pos));
    const std::string type = trim(s.substr(pos + 2));
    static const std::regex ident(R"(^[A-Za-z_]\w*$)");
    if (!std::regex_match(name, ident) || !std::regex_match(type, ident)) {
      throw ParseError("bad slot predicate '" + s + "'", 1, 1);
    }
    if (type == "Constant") {
      p.kind = SlotPredicate::Kind::IsConstant;
    } else {
      p.kind = SlotPredicate::Kind::TypeBound;
      p.bound = parse_symtype(type);
    }
    return {name, p};
  }
  static const std::regex range(R"(^([A-Za-z_]\w*)\s+in\s+(-?\d+)\s*\.\.\s*(-?\d+)$)");
  std::smatch m;
  if (std::regex_match(s, m, range)) {
    p.kind = SlotPredicate::Kind::IntRange;
    p.lo = std::stol(m[2]);
    p.hi = std::stol(m[3]);
    return {m[1], p};
  }
  throw ParseError("bad slot predicate '" + s + "'", 1, 1);
}

// ---- patterns ----------------------------------------------------------------------------

Pattern Pattern::make_slot(std::string name, std::vector<SlotPredicate> preds) {
  Pattern p;
  p.kind = Kind::Slot;
  p.slot = std::move(name);
  p.predicates = std::move(preds);
  return p;
}

Pattern Pattern::make_literal(Term value) {
  Pattern p;
  p.kind = Kind::Literal;
  p.literal = std::move(value);
  return p;
}

Pattern Pattern::make_node(OpId op, std::vector<Pattern> args) {
  Pattern p;
  p.kind = Kind::Node;
  p.op = op;
  p.args = std::move(args);
  return p;
}

std::vector<std::string> Pattern::slots() const {
  std::vector<std::string> out;
  auto visit = [&](auto&& self, const Pattern& p) -> void {
    if (p.kind == Kind::Slot) {
      if (std::find(out.begin(), out.end(), p.slot) == out.end()) out.push_back(p.slot);
    }
    for (const Pattern& a : p.args) self(self, a);
  };
  visit(visit, *this);
  return out;
}

std::string Pattern::str() const {
  switch (kind) {
    case Kind::Slot: return "~" + slot;
    case Kind::Literal: return literal.is_symbol() ? literal.name() : literal.value().str();
    case Kind::Node: {
      std::string s = "(" + op.name();
      for (const Pattern& a : args) s += " " + a.str();
      return s + ")";
    }
  }
  return {};
}

namespace {

class PatternBuilder {
 public:
  PatternBuilder(PatternStyle style, const Predicates& preds) : style_(style), preds_(preds) {}

  Pattern build(const SyntaxNode& n) {
    using K = SyntaxNode::Kind;
    switch (n.kind) {
      case K::Number: return Pattern::make_literal(Term(Constant::parse(n.text)));
      case K::Ident: return Pattern::make_literal(make_symbol(n.text));
      case K::Slot: {
        auto it = preds_.find(n.text);
        return Pattern::make_slot(n.text, it == preds_.end() ? std::vector<SlotPredicate>{} : it->second);
      }
      case K::Call: {
        std::optional<OpId> op = OpId::find(n.text);
        if (!op) op = OpId::declare(n.text, static_cast<int>(n.children.size()));
        if (!op->accepts_arity(n.children.size())) {
          throw ParseError("wrong number of arguments to '" + n.text + "'", n.line, n.column);
        }
        std::vector<Pattern> args;
        for (const SyntaxNode& c : n.children) args.push_back(build(c));
        return Pattern::make_node(*op, std::move(args));
      }
      case K::Negate: {
        const SyntaxNode& inner = n.children[0];
        if (inner.kind == K::Number) return Pattern::make_literal(Term(-Constant::parse(inner.text)));
        Pattern x = build(inner);
        if (style_ == PatternStyle::Binary) return Pattern::make_node(OpId::sub(), {std::move(x)});
        return negate(std::move(x));
      }
      case K::Binary: {
        Pattern l = build(n.children[0]);
        Pattern r = build(n.children[1]);
        const char op = n.text[0];
        if (style_ == PatternStyle::Binary) {
          const OpId id = op == '+' ? OpId::add() : op == '-' ? OpId::sub() : op == '*' ? OpId::mul()
                        : op == '/' ? OpId::div() : OpId::pow();
          return Pattern::make_node(id, {std::move(l), std::move(r)});
        }
        switch (op) {
          case '+': return flat(OpId::add(), std::move(l), std::move(r));
          case '-': return flat(OpId::add(), std::move(l), negate(std::move(r)));
          case '*': return flat(OpId::mul(), std::move(l), std::move(r));
          case '/': return flat(OpId::mul(), std::move(l), reciprocal(std::move(r)));
          default: return Pattern::make_node(OpId::pow(), {std::move(l), std::move(r)});
        }
      }
    }
    return {};
  }

 private:
  static bool is_constant_literal(const Pattern& p) { return p.kind == Pattern::Kind::Literal && p.literal.is_constant(); }

  static Pattern negate(Pattern x) {
    if (is_constant_literal(x)) return Pattern::make_literal(Term(-x.literal.value()));
    return flat(OpId::mul(), Pattern::make_literal(Term(-1)), std::move(x));
  }

  static Pattern reciprocal(Pattern x) {
    if (is_constant_literal(x) && !x.literal.value().is_zero()) {
      return Pattern::make_literal(Term(Constant(1) / x.literal.value()));
    }
    return Pattern::make_node(OpId::pow(), {std::move(x), Pattern::make_literal(Term(-1))});
  }

  static Pattern flat(OpId op, Pattern l, Pattern r) {
    std::vector<Pattern> args;
    for (Pattern* p : {&l, &r}) {
      if (p->kind == Pattern::Kind::Node && p->op == op) {
        for (Pattern& a : p->args) args.push_back(std::move(a));
      } else {
        args.push_back(std::move(*p));
      }
    }
    return Pattern::make_node(op, std::move(args));
  }

  PatternStyle style_;
  const Predicates& preds_;
};

// ---- matching ----------------------------------------------------------------------------

using Continuation = std::function<bool(Bindings&)>;

bool match_rec(const Pattern& p, const Term& t, Bindings& b, const Continuation& k);

bool match_seq(const std::vector<Pattern>& ps, const std::vector<const Term*>& ts, std::size_t i, Bindings& b,
               const Continuation& k) {
  if (i == ps.size()) return k(b);
  return match_rec(ps[i], *ts[i], b, [&](Bindings& b2) { return match_seq(ps, ts, i + 1, b2, k); });
}

bool literal_matches(const Term& lit, const Term& t) {
  if (lit.is_symbol()) return t.is_symbol() && t.name() == lit.name();
  return t.is_constant() && t.value() == lit.value();
}

bool match_rec(const Pattern& p, const Term& t, Bindings& b, const Continuation& k) {
  switch (p.kind) {
    case Pattern::Kind::Literal: return literal_matches(p.literal, t) && k(b);
    case Pattern::Kind::Slot: {
      for (const SlotPredicate& pred : p.predicates) {
        if (!pred.test(t)) return false;
      }
      if (auto it = b.find(p.slot); it != b.end()) return it->second == t && k(b);
      b.emplace(p.slot, t);
      if (k(b)) return true;
      b.erase(p.slot);
      return false;
    }
    case Pattern::Kind::Node: {
      if (!is_tree(t) || !(operation(t) == p.op)) return false;
      const std::vector<Term>& args = arguments(t);
      if (args.size() != p.args.size()) return false;
      std::vector<const Term*> order;
      for (const Term& a : args) order.push_back(&a);
      if (match_seq(p.args, order, 0, b, k)) return true;
      if (!p.op.commutative() || args.size() > kCommutativeRetryLimit || args.size() < 2) return false;
      std::vector<std::size_t> perm(args.size());
      std::iota(perm.begin(), perm.end(), 0);
      while (std::next_permutation(perm.begin(), perm.end())) {
        for (std::size_t i = 0; i < perm.size(); ++i) order[i] = &args[perm[i]];
        if (match_seq(p.args, order, 0, b, k)) return true;
      }
      return false;
    }
  }
  return false;
}

}  // namespace

Pattern parse_pattern(std::string_view text, PatternStyle style, const Predicates& predicates) {
  return PatternBuilder(style, predicates).build(parse_syntax(text, true));
}

std::optional<Bindings> match(const Pattern& p, const Term& t) {
  Bindings b;
  if (match_rec(p, t, b, [](Bindings&) { return true; })) return b;
  return std::nullopt;
}

std::vector<Bindings> match_all(const Pattern& p, const Term& t) {
  std::vector<Bindings> out;
  Bindings b;
  match_rec(p, t, b, [&](Bindings& found) {
    if (std::find(out.begin(), out.end(), found) == out.end()) out.push_back(found);
    return false;
  });
  return out;
}

Term instantiate(const Pattern& templ, const Bindings& b) {
  switch (templ.kind) {
    case Pattern::Kind::Slot: {
      auto it = b.find(templ.slot);
      if (it == b.end()) throw ContractError("unbound slot ~" + templ.slot);
      return it->second;
    }
    case Pattern::Kind::Literal: return templ.literal;
    case Pattern::Kind::Node: {
      std::vector<Term> args;
      args.reserve(templ.args.size());
      for (const Pattern& a : templ.args) args.push_back(instantiate(a, b));
      return build(templ.op, args);
    }
  }
  return Term();
}

// ---- rules -------------------------------------------------------------------------------

Rule compile_rule(std::string_view lhs, std::string_view rhs, const Predicates& predicates, PatternStyle style,
                  std::string name) {
  Rule r;
  r.name = name.empty() ? std::string(lhs) + " => " + std::string(rhs) : std::move(name);
  r.lhs = parse_pattern(lhs, style, predicates);
  r.rhs = parse_pattern(rhs, style);
  const std::vector<std::string> bound = r.lhs.slots();
  for (const std::string& s : r.rhs.slots()) {
    if (std::find(bound.begin(), bound.end(), s) == bound.end()) {
      throw Error("rule '" + r.name + "': slot ~" + s + " is not bound by the left-hand side");
    }
  }
  for (const auto& [s, preds] : predicates) {
    if (std::find(bound.begin(), bound.end(), s) == bound.end()) {
      throw Error("rule '" + r.name + "': predicate on unknown slot ~" + s);
    }
  }
  return r;
}

std::optional<Term> apply_rule(const Rule& r, const Term& t) {
  auto b = match(r.lhs, t);
  if (!b) return std::nullopt;
  return instantiate(r.rhs, *b);
}

std::vector<RuleText> parse_rule_text(std::string_view text) {
  std::vector<RuleText> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  static const std::regex head(R"(^\s*([A-Za-z_][\w\-]*)\s*:(?!:)\s*(.*)$)");
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    std::smatch m;
    if (!std::regex_match(line, m, head)) throw ParseError("expected 'name: LHS => RHS'", line_no, 1);
    RuleText rt;
    rt.name = m[1];
    rt.line = line_no;
    std::string body = m[2];
    if (auto w = body.find(" where "); w != std::string::npos) {
      std::string clause = body.substr(w + 7);
      body = body.substr(0, w);
      std::istringstream parts(clause);
      std::string part;
      while (std::getline(parts, part, ',')) {
        try {
          auto [slot, pred] = parse_slot_predicate(part);
          rt.predicates[slot].push_back(pred);
        } catch (const ParseError& e) {
          throw ParseError(std::string("in rule '") + rt.name + "': bad predicate '" + trim(part) + "'", line_no, 1);
        }
      }
    }
    std::size_t arrow = body.find("<=>");
    std::size_t width = 3;
    if (arrow != std::string::npos) {
      rt.bidirectional = true;
    } else {
      arrow = body.find("=>");
      width = 2;
      if (arrow == std::string::npos) throw ParseError("rule '" + rt.name + "' has no '=>'", line_no, 1);
    }
    rt.lhs = trim(body.substr(0, arrow));
    rt.rhs = trim(body.substr(arrow + width));
    out.push_back(std::move(rt));
  }
  return out;
}

std::vector<Rule> compile_rules(const std::vector<RuleText>& texts, PatternStyle style) {
  std::vector<Rule> out;
  for (const RuleText& rt : texts) {
    try {
      out.push_back(compile_rule(rt.lhs, rt.rhs, rt.predicates, style, rt.name));
      if (rt.bidirectional) out.push_back(compile_rule(rt.rhs, rt.lhs, rt.predicates, style, rt.name + "-rev"));
    } catch (const ParseError& e) {
      throw ParseError("in rule '" + rt.name + "': " + std::string(e.what()), rt.line, e.column());
    }
  }
  return out;
}

std::vector<Rule> load_rules(std::string_view text, PatternStyle style) {
  return compile_rules(parse_rule_text(text), style);
}

// ---- combinators -------------------------------------------------------------------------

struct Rewriter::Impl {
  enum class Kind { Identity, Rule, Function, Chain, IfElse, Prewalk, Postwalk, Fixpoint };
  Kind kind = Kind::Identity;
  symx::Rule rule;
  std::string name;
  std::function<Term(const Term&)> fn;
  std::vector<Rewriter> children;
  TermPredicate cond;
  std::size_t cap = 1;
};

namespace {

template <class F>
Term map_arguments(const Term& t, F&& f) {
  if (!is_tree(t)) return t;
  const std::vector<Term>& args = arguments(t);
  std::vector<Term> out;
  out.reserve(args.size());
  bool changed = false;
  for (const Term& a : args) {
    out.push_back(f(a));
    changed = changed || !out.back().same_node(a);
  }
  if (!changed) return t;
  return similar_term(t, operation(t), out);
}

}  // namespace

Rewriter::Rewriter() : impl_(std::make_shared<Impl>()) {}

Rewriter Rewriter::identity() { return Rewriter(); }

Rewriter Rewriter::rule(Rule r) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Impl::Kind::Rule;
  impl->name = r.name;
  impl->rule = std::move(r);
  return Rewriter(std::move(impl));
}

Rewriter Rewriter::function(std::string name, std::function<Term(const Term&)> fn) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Impl::Kind::Function;
  impl->name = std::move(name);
  impl->fn = std::move(fn);
  return Rewriter(std::move(impl));
}

Rewriter Rewriter::chain(std::vector<Rewriter> rs) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Impl::Kind::Chain;
  impl->children = std::move(rs);
  return Rewriter(std::move(impl));
}

Rewriter Rewriter::if_else(TermPredicate cond, Rewriter then, Rewriter els) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Impl::Kind::IfElse;
  impl->cond = std::move(cond);
  impl->children = {std::move(then), std::move(els)};
  return Rewriter(std::move(impl));
}

Rewriter Rewriter::prewalk(Rewriter inner) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Impl::Kind::Prewalk;
  impl->children = {std::move(inner)};
  return Rewriter(std::move(impl));
}

Rewriter Rewriter::postwalk(Rewriter inner) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Impl::Kind::Postwalk;
  impl->children = {std::move(inner)};
  return Rewriter(std::move(impl));
}

Rewriter Rewriter::fixpoint(Rewriter inner, std::size_t max_iters) {
  if (max_iters == 0) throw ContractError("fixpoint needs max_iters >= 1");
  auto impl = std::make_shared<Impl>();
  impl->kind = Impl::Kind::Fixpoint;
  impl->children = {std::move(inner)};
  impl->cap = max_iters;
  return Rewriter(std::move(impl));
}

Term Rewriter::operator()(const Term& t) const {
  const Impl& r = *impl_;
  switch (r.kind) {
    case Impl::Kind::Identity: return t;
    case Impl::Kind::Rule: {
      auto out = apply_rule(r.rule, t);
      return out ? *out : t;
    }
    case Impl::Kind::Function: return r.fn(t);
    case Impl::Kind::Chain: {
      Term cur = t;
      for (const Rewriter& c : r.children) cur = c(cur);
      return cur;
    }
    case Impl::Kind::IfElse: return r.cond(t) ? r.children[0](t) : r.children[1](t);
    case Impl::Kind::Prewalk: {
      const Rewriter& inner = r.children[0];
      auto walk = [&](auto&& self, const Term& u) -> Term {
        return map_arguments(inner(u), [&](const Term& a) { return self(self, a); });
      };
      return walk(walk, t);
    }
    case Impl::Kind::Postwalk: {
      const Rewriter& inner = r.children[0];
      auto walk = [&](auto&& self, const Term& u) -> Term {
        return inner(map_arguments(u, [&](const Term& a) { return self(self, a); }));
      };
      return walk(walk, t);
    }
    case Impl::Kind::Fixpoint: return run_fixpoint(r.children[0], t, r.cap).term;
  }
  return t;
}

std::string Rewriter::describe() const {
  const Impl& r = *impl_;
  auto list = [&] {
    std::string s;
    for (std::size_t i = 0; i < r.children.size(); ++i) s += (i ? ", " : "") + r.children[i].describe();
    return s;
  };
  switch (r.kind) {
    case Impl::Kind::Identity: return "identity";
    case Impl::Kind::Rule:
    case Impl::Kind::Function: return r.name;
    case Impl::Kind::Chain: return "chain([" + list() + "])";
    case Impl::Kind::IfElse: return "if_else(" + list() + ")";
    case Impl::Kind::Prewalk: return "prewalk(" + list() + ")";
    case Impl::Kind::Postwalk: return "postwalk(" + list() + ")";
    case Impl::Kind::Fixpoint: return "fixpoint(" + list() + ", " + std::to_string(r.cap) + ")";
  }
  return {};
}

TermPredicate changes(Rewriter r) {
  return [r = std::move(r)](const Term& t) { return !(r(t) == t); };
}

FixpointResult run_fixpoint(const Rewriter& r, const Term& t, std::size_t max_iters) {
  FixpointResult res{t, 0, false};
  while (res.iterations < max_iters) {
    Term next = r(res.term);
    ++res.iterations;
    if (next == res.term) {
      res.converged = true;
      return res;
    }
    res.term = std::move(next);
  }
  return res;
}

// ---- shipped ruleset ---------------------------------------------------------------------

std::string_view default_rule_text() {
  return R"(# Number simplification rules. Patterns are written against canonical forms:
# a/b is a*b^-1 and a-b is a + -1*b, so quotient and difference rules still apply.

pythagorean:        sin(~x)^2 + cos(~x)^2 => 1
pythagorean-scaled: ~c*sin(~x)^2 + ~c*cos(~x)^2 => ~c where ~c::Constant
pythagorean-rest:   ~a + sin(~x)^2 + cos(~x)^2 => ~a + 1
pythagorean-rest-scaled: ~a + ~c*sin(~x)^2 + ~c*cos(~x)^2 => ~a + ~c where ~c::Constant
one-minus-sin2:     1 - sin(~x)^2 => cos(~x)^2
one-minus-cos2:     1 - cos(~x)^2 => sin(~x)^2
sin2-minus-one:     sin(~x)^2 - 1 => -cos(~x)^2
cos2-minus-one:     cos(~x)^2 - 1 => -sin(~x)^2

sin-odd:            sin(-~x) => -sin(~x)
cos-even:           cos(-~x) => cos(~x)
tan-odd:            tan(-~x) => -tan(~x)
tan-quotient:       sin(~x)/cos(~x) => tan(~x)
tan-times-cos:      tan(~x)*cos(~x) => sin(~x)

sin-zero:           sin(0) => 0
cos-zero:           cos(0) => 1
tan-zero:           tan(0) => 0
exp-zero:           exp(0) => 1
log-one:            log(1) => 0
sqrt-zero:          sqrt(0) => 0
sqrt-one:           sqrt(1) => 1

exp-log:            exp(log(~x)) => ~x
log-exp:            log(exp(~x)) => ~x where ~x::Real
exp-product:        exp(~x)*exp(~y) => exp(~x + ~y)
exp-power:          exp(~x)^~n => exp(~n*~x) where ~n::Constant
sqrt-square:        sqrt(~x)^2 => ~x
sqrt-of-square:     sqrt(~x^2) => abs(~x) where ~x::Real

abs-abs:            abs(abs(~x)) => abs(~x)
abs-neg:            abs(-~x) => abs(~x)
abs-square:         abs(~x)^2 => ~x^2 where ~x::Real
min-idem:           min(~x, ~x) => ~x
max-idem:           max(~x, ~x) => ~x

# Off by default: the double-angle expansion and its reverse loop against each other.
# double-angle:     sin(2*~x) => 2*sin(~x)*cos(~x)
# double-angle-rev: 2*sin(~x)*cos(~x) => sin(2*~x)
)";
}

std::vector<Rule> default_rules() {
  static const std::vector<Rule> rules = load_rules(default_rule_text());
  return rules;
}

namespace {

std::optional<Constant> exact_sqrt(const Constant& c) {
  if (!c.is_exact() || c.is_negative()) return std::nullopt;
  const mpz_class num = c.exact().get_num();
  const mpz_class den = c.exact().get_den();
  if (!mpz_perfect_square_p(num.get_mpz_t()) || !mpz_perfect_square_p(den.get_mpz_t())) return std::nullopt;
  return Constant(mpq_class(sqrt(num), sqrt(den)));
}

Term fold_exact_function(const Term& t) {
  if (!t.is_app()) return t;
  const auto args = t.args();
  for (const Term& a : args) {
    if (!a.is_constant() || !a.value().is_exact()) return t;
  }
  switch (t.op().prim()) {
    case Prim::Abs: return Term(args[0].value().abs());
    case Prim::Min:
    case Prim::Max: {
      Constant best = args[0].value();
      for (const Term& a : args.subspan(1)) {
        const bool less = compare(a.value(), best) < 0;
        if (t.op().prim() == Prim::Min ? less : compare(a.value(), best) > 0) best = a.value();
      }
      return Term(best);
    }
    case Prim::Sqrt:
      if (auto r = exact_sqrt(args[0].value())) return Term(*r);
      return t;
    default: return t;
  }
}

}  // namespace

std::vector<Rewriter> builtin_rewriters() {
  return {
      Rewriter::function("flatten-raw", [](const Term& t) { return t.is_raw_arithmetic() ? build(t.op(), t.args()) : t; }),
      Rewriter::function("fold-exact-functions", fold_exact_function),
  };
}

Rewriter make_simplifier(const std::vector<Rule>& rules, std::size_t max_iters) {
  std::vector<Rewriter> steps = builtin_rewriters();
  for (const Rule& r : rules) steps.push_back(Rewriter::rule(r));
  return Rewriter::fixpoint(Rewriter::postwalk(Rewriter::chain(std::move(steps))), max_iters);
}

Term default_simplify(const Term& t) {
  static const Rewriter simplifier = make_simplifier(default_rules());
  return simplifier(t);
}

}  // namespace symx

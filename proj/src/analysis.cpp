#include "symx/analysis.hpp"

#include "symx/error.hpp"

#include <cmath>
#include <functional>
#include <unordered_set>

namespace symx {

namespace {

double power(double base, const Constant& e) {
  if (e.is_one()) return base;
  if (e.is_minus_one()) return 1.0 / base;
  return std::pow(base, e.to_double());
}

double eval_app(const Term& t, const Env& env) {
  const auto args = t.args();
  auto arg = [&](std::size_t i) { return evaluate(args[i], env); };
  switch (t.op().prim()) {
    case Prim::Add: {
      double s = 0.0;
      for (std::size_t i = 0; i < args.size(); ++i) s += arg(i);
      return s;
    }
    case Prim::Mul: {
      double p = 1.0;
      for (std::size_t i = 0; i < args.size(); ++i) p *= arg(i);
      return p;
    }
    case Prim::Sub: return args.size() == 1 ? -arg(0) : arg(0) - arg(1);
    case Prim::Div: return arg(0) / arg(1);
    case Prim::Pow: return std::pow(arg(0), arg(1));
    case Prim::Sin: return std::sin(arg(0));
    case Prim::Cos: return std::cos(arg(0));
    case Prim::Tan: return std::tan(arg(0));
    case Prim::Exp: return std::exp(arg(0));
    case Prim::Log: return std::log(arg(0));
    case Prim::Sqrt: return std::sqrt(arg(0));
    case Prim::Abs: return std::fabs(arg(0));
    case Prim::Min:
    case Prim::Max: {
      double r = arg(0);
      for (std::size_t i = 1; i < args.size(); ++i) {
        r = t.op().prim() == Prim::Min ? std::fmin(r, arg(i)) : std::fmax(r, arg(i));
      }
      return r;
    }
    case Prim::User: break;
  }
  throw Error("cannot evaluate uninterpreted function '" + t.op().name() + "'");
}

}  // namespace

double evaluate(const Term& t, const Env& env) {
  switch (t.kind()) {
    case Term::Kind::Constant: return t.value().to_double();
    case Term::Kind::Symbol: {
      auto it = env.find(t.name());
      if (it == env.end()) throw Error("unbound symbol '" + t.name() + "'");
      return it->second;
    }
    case Term::Kind::Add: {
      double s = t.coeff().to_double();
      for (const auto& [key, c] : t.entries()) {
        const double v = evaluate(key, env);
        s += c.is_one() ? v : c.to_double() * v;
      }
      return s;
    }
    case Term::Kind::Mul: {
      double p = t.coeff().to_double();
      for (const auto& [b, e] : t.entries()) p *= power(evaluate(b, env), e);
      return p;
    }
    case Term::Kind::Pow: return std::pow(evaluate(t.base(), env), evaluate(t.exponent(), env));
    case Term::Kind::App: return eval_app(t, env);
  }
  return 0.0;
}

Term substitute(const Term& t, const std::unordered_map<Term, Term, TermHash>& bindings) {
  if (bindings.empty()) return t;
  if (t.is_symbol()) {
    auto it = bindings.find(t);
    return it == bindings.end() ? t : it->second;
  }
  if (!is_tree(t)) return t;
  const auto& args = arguments(t);
  std::vector<Term> rebuilt;
  rebuilt.reserve(args.size());
  bool changed = false;
  for (const Term& a : args) {
    rebuilt.push_back(substitute(a, bindings));
    changed = changed || !rebuilt.back().same_node(a);
  }
  if (!changed) return t;
  return similar_term(t, operation(t), rebuilt, t.is_app() && !t.op().is_arithmetic() ? std::optional(t.symtype()) : std::nullopt);
}

std::vector<Term> free_symbols(const Term& t) {
  std::vector<Term> out;
  std::unordered_set<Term, TermHash> seen;
  std::function<void(const Term&)> visit = [&](const Term& u) {
    if (u.is_symbol()) {
      if (seen.insert(u).second) out.push_back(u);
      return;
    }
    if (!is_tree(u)) return;
    if (u.is_add() || u.is_mul()) {
      for (const auto& [key, c] : u.entries()) visit(key);
      return;
    }
    for (const Term& a : arguments(u)) visit(a);
  };
  visit(t);
  return out;
}

bool occurs(const Term& t, const Term& symbol) {
  if (t.is_symbol()) return t == symbol;
  if (!is_tree(t)) return false;
  if (t.is_add() || t.is_mul()) {
    for (const auto& [key, c] : t.entries()) {
      if (occurs(key, symbol)) return true;
    }
    return false;
  }
  for (const Term& a : arguments(t)) {
    if (occurs(a, symbol)) return true;
  }
  return false;
}

namespace {

void validate(const Term& t, std::vector<std::string>& out) {
  auto fail = [&](const std::string& what) { out.push_back(what); };
  switch (t.kind()) {
    case Term::Kind::Constant:
    case Term::Kind::Symbol: return;
    case Term::Kind::Add:
    case Term::Kind::Mul: {
      const bool add = t.is_add();
      const auto entries = t.entries();
      const std::string tag = add ? "Add" : "Mul";
      if (entries.empty()) fail(tag + " with an empty map");
      for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& [key, c] = entries[i];
        if (key.is_constant()) fail(tag + " has a constant key");
        if (add && key.is_add()) fail("Add has an Add key");
        if (!add && key.is_mul()) fail("Mul has a Mul key");
        if (c.is_zero()) fail(tag + " stores a zero " + (add ? "coefficient" : "exponent"));
        if (!add && key.is_pow() && key.exponent().is_constant() && !key.base().is_constant() && !key.base().is_mul()) {
          fail("Mul key is a Pow with constant exponent that should have been absorbed");
        }
        if (!add && key.is_pow() && key.exponent().is_constant() && c.is_integer() && !(c.is_exact() && c.is_one())) {
          fail("Mul key is an opaque Pow raised to an integer");
        }
        if (add && key.is_mul() && !(key.coeff().is_exact() && key.coeff().is_one())) fail("Add key is a Mul with a coefficient");
        if (i > 0 && (entries[i - 1].first <=> key) >= 0) fail(tag + " keys not in strict canonical order");
        validate(key, out);
      }
      if (add && t.coeff().is_exact() && t.coeff().is_zero() && entries.size() == 1) fail("Add with zero coeff and a single entry");
      if (!add && t.coeff().is_zero()) fail("Mul with zero coefficient");
      if (!add && t.coeff().is_exact() && t.coeff().is_one() && entries.size() == 1) fail("Mul with unit coeff and a single entry");
      return;
    }
    case Term::Kind::Pow: {
      const Term& e = t.exponent();
      if (e.is_constant()) {
        if (e.value().is_zero()) fail("Pow with exponent 0");
        if (e.value().is_one()) fail("Pow with exponent 1");
        if (t.base().is_constant()) {
          try {
            if (Constant::pow(t.base().value(), e.value())) fail("Pow of constants that folds");
          } catch (const DomainError&) {
          }
        }
        if (e.value().is_integer() && t.base().is_mul()) fail("Pow of Mul with integer exponent");
        if (e.value().is_integer() && t.base().is_pow() && t.base().exponent().is_constant()) {
          fail("nested Pow with constant exponents");
        }
      }
      validate(t.base(), out);
      validate(e, out);
      return;
    }
    case Term::Kind::App:
      if (t.op().is_arithmetic()) fail("raw arithmetic App '" + t.op().name() + "'");
      for (const Term& a : t.args()) validate(a, out);
      return;
  }
}

}  // namespace

std::vector<std::string> validate_canonical(const Term& t) {
  std::vector<std::string> out;
  validate(t, out);
  return out;
}

}  // namespace symx

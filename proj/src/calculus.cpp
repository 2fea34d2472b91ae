#include "symx/calculus.hpp"

#include "symx/analysis.hpp"
#include "symx/error.hpp"

namespace symx {

Term derivative(const Term& t, const Term& var) {
  if (!var.is_symbol()) throw ContractError("derivative with respect to a non-symbol");
  if (!t.symtype().is_numeric()) throw TypeError("derivative of a non-numeric term");
  if (!occurs(t, var)) return Term(0);
  switch (t.kind()) {
    case Term::Kind::Constant: return Term(0);
    case Term::Kind::Symbol: return Term(1);
    case Term::Kind::Add: {
      std::vector<Term> parts;
      for (const auto& [key, c] : t.entries()) parts.push_back(Term(c) * derivative(key, var));
      return add_terms(parts);
    }
    case Term::Kind::Mul: {
      const auto& factors = arguments(t);
      std::vector<Term> parts;
      for (std::size_t i = 0; i < factors.size(); ++i) {
        if (!occurs(factors[i], var)) continue;
        std::vector<Term> product{derivative(factors[i], var)};
        for (std::size_t j = 0; j < factors.size(); ++j) {
          if (j != i) product.push_back(factors[j]);
        }
        parts.push_back(mul_terms(product));
      }
      return add_terms(parts);
    }
    case Term::Kind::Pow: {
      const Term& b = t.base();
      const Term& e = t.exponent();
      if (!occurs(e, var)) return e * pow(b, e - Term(1)) * derivative(b, var);
      // d(b^e) = b^e * (e' log b + e b'/b)
      return t * (derivative(e, var) * log(b) + e * derivative(b, var) / b);
    }
    case Term::Kind::App: break;
  }
  if (t.op().is_arithmetic()) return derivative(canonicalize(t), var);
  const auto args = t.args();
  const Term& u = args[0];
  switch (t.op().prim()) {
    case Prim::Sin: return cos(u) * derivative(u, var);
    case Prim::Cos: return -sin(u) * derivative(u, var);
    case Prim::Tan: return (Term(1) + pow(tan(u), Term(2))) * derivative(u, var);
    case Prim::Exp: return t * derivative(u, var);
    case Prim::Log: return derivative(u, var) / u;
    case Prim::Sqrt: return derivative(u, var) / (Term(2) * t);
    case Prim::Abs:
    case Prim::Min:
    case Prim::Max: throw DomainError("derivative of '" + t.op().name() + "' is not supported");
    default: throw Error("derivative of uninterpreted function '" + t.op().name() + "' is not supported");
  }
}

std::vector<JacobianEntry> sparse_jacobian(std::span<const Term> exprs, std::span<const Term> vars) {
  std::vector<JacobianEntry> out;
  for (std::size_t i = 0; i < exprs.size(); ++i) {
    if (!exprs[i].symtype().is_numeric()) throw TypeError("jacobian of a non-numeric expression");
    for (std::size_t j = 0; j < vars.size(); ++j) {
      if (occurs(exprs[i], vars[j])) out.push_back({i, j, derivative(exprs[i], vars[j])});
    }
  }
  return out;
}

}  // namespace symx

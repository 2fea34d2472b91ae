#pragma once

#include "symx/term.hpp"

#include <string>
#include <unordered_map>
#include <vector>

namespace symx {

/// Numeric bindings for free symbols, keyed by symbol name.
using Env = std::unordered_map<std::string, double>;

/// float64 evaluation. Throws Error naming an unbound symbol, or on an uninterpreted function.
double evaluate(const Term& t, const Env& env);

/// Simultaneous replacement of symbols, rebuilt through similar_term.
Term substitute(const Term& t, const std::unordered_map<Term, Term, TermHash>& bindings);

/// Free symbols in first-occurrence order (depth-first over arguments()).
std::vector<Term> free_symbols(const Term& t);
bool occurs(const Term& t, const Term& symbol);

/// Checks the canonical-form invariants of every node reachable from t.
/// Returns a description of each violation; empty means canonical.
std::vector<std::string> validate_canonical(const Term& t);

}  // namespace symx

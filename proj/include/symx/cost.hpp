#pragma once

#include "symx/term.hpp"

#include <map>
#include <string>
#include <string_view>

namespace symx {

/// Per-operator cycle weights. The same weight covers unary and binary minus.
struct CostModel {
  double leaf_cost = 1.0;
  std::map<std::string, double, std::less<>> weights;

  /// leaf=1, +=1, -=1, *=3, /=30, ^=60, sin/cos/tan/exp/log=100, sqrt=20, abs=1, min/max=2.
  static CostModel defaults();

  /// `key = value` lines with `#` comments. Keys are operator names or `leaf`.
  /// Entries override the defaults; an empty text yields the defaults.
  static CostModel parse(std::string_view text);

  /// Throws Error naming the operator when it has no weight.
  double weight(const OpId& op) const;
  double weight(std::string_view name) const;
};

/// Rewrites t into a raw tree of binary + - * / ^, unary -, and function applications.
/// Add and Mul fold left in arguments() order; negative Add terms become binary -;
/// denominators collect under a single /; negative constant exponents become 1/b^k.
/// Raw arithmetic applications keep their shape, with n-ary + and * folded left.
Term lower_binary(const Term& t);

/// Sum of weights over a raw tree as produced by lower_binary.
double tree_cost(const Term& tree, const CostModel& cm);

/// tree_cost(lower_binary(t)).
double cycle_cost(const Term& t, const CostModel& cm);

}  // namespace symx

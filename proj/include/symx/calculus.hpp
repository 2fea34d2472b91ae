#pragma once

#include "symx/term.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace symx {

/// Symbolic derivative with respect to a symbol; the result is canonical.
/// Throws when the expression depends on `var` through abs, min, max or an
/// uninterpreted function.
Term derivative(const Term& t, const Term& var);

struct JacobianEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  Term entry;
};

/// Entry (i, j) is present iff vars[j] occurs free in exprs[i]. Sorted by (row, col).
std::vector<JacobianEntry> sparse_jacobian(std::span<const Term> exprs, std::span<const Term> vars);

}  // namespace symx

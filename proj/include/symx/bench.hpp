#pragma once

#include "symx/rewrite.hpp"
#include "symx/term.hpp"

#include <cstdint>
#include <vector>

namespace symx {

/// A left-leaning chain: ((leaves[0] ops[0] leaves[1]) ops[1] leaves[2]) ...
struct RandomChain {
  std::vector<Term> leaves;
  std::vector<Prim> ops;  // Add or Mul, one fewer than leaves
};

/// `terms` leaves drawn from x0..x9 and the integers 1..9, joined by randomly chosen + and *.
RandomChain random_chain(std::size_t terms, std::uint64_t seed);

/// Builds the chain through the canonical constructors.
Term construct_canonical(const RandomChain& chain);
/// Builds the chain from raw App nodes with no simplification.
Term construct_raw(const RandomChain& chain);

/// Rule text for the baseline. Each binary rule is tried on every argument pair of an n-ary node.
std::string_view like_term_rule_text();
std::string_view constant_rule_text();

/// Applies the first matching rule to some argument pair of a raw + or * node, repeatedly.
Rewriter ac_pair_rules(std::string name, std::vector<Rule> rules);

/// fixpoint(postwalk(chain(flatten, collect-like-terms, fold-constants))) over raw + and * nodes,
/// with the last two stages driven by pattern rules.
Rewriter rule_based_simplifier(std::size_t max_iters = 64);
/// The same pipeline with the stages written as direct functions (hash grouping, no matching).
Rewriter hand_coded_simplifier(std::size_t max_iters = 64);

struct BenchResult {
  std::vector<double> canonical_ms;
  std::vector<double> baseline_ms;
  double canonical_median_ms = 0;
  double baseline_median_ms = 0;
  std::vector<double> hand_coded_ms;
  double hand_coded_median_ms = 0;
  double ratio = 0;  // baseline / canonical
  double hand_coded_ratio = 0;
  Term canonical;
  Term baseline;
  Term hand_coded;
};

BenchResult bench_construct(std::size_t terms, std::uint64_t seed, std::size_t warmup = 3, std::size_t runs = 10);

}  // namespace symx

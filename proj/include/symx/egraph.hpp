#pragma once

#include "symx/cost.hpp"
#include "symx/rewrite.hpp"
#include "symx/term.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace symx {

using ClassId = std::uint32_t;

/// Leaf (constant or symbol) or an operator over e-class children.
struct ENode {
  Term leaf;  // valid when op is not set
  OpId op;
  std::vector<ClassId> children;

  static ENode make_leaf(Term t);
  static ENode make_op(OpId op, std::vector<ClassId> children);

  bool is_leaf() const { return !op.valid(); }
  bool operator==(const ENode& other) const;
  std::size_t hash() const;
};

struct ENodeHash {
  std::size_t operator()(const ENode& n) const { return n.hash(); }
};

struct EClass {
  ClassId id = 0;
  std::vector<ENode> nodes;
  /// Operator nodes dropped once the class folded to a constant; still hashconsed.
  std::vector<ENode> folded;
  std::vector<std::pair<ENode, ClassId>> parents;
  std::optional<Constant> constant;  // constant-folding analysis
  SymType type = SymType::Kind::Number;
};

using Subst = std::map<std::string, ClassId, std::less<>>;

struct EMatch {
  ClassId eclass;
  Subst subst;
  bool operator==(const EMatch&) const = default;
};

class EGraph {
 public:
  ClassId add(ENode node);
  /// Lowers t with lower_binary and inserts it bottom-up.
  ClassId add_term(const Term& t);
  /// Inserts a raw binary tree as-is.
  ClassId add_tree(const Term& tree);

  ClassId find(ClassId id) const;
  ClassId merge(ClassId a, ClassId b);
  void rebuild();

  /// No pending merges or analysis updates.
  bool clean() const { return pending_.empty() && analysis_pending_.empty(); }
  std::size_t pending() const { return pending_.size(); }

  /// Canonical class ids in ascending order.
  std::vector<ClassId> class_ids() const;
  const EClass& eclass(ClassId id) const;
  std::size_t class_count() const;
  /// Distinct e-nodes currently stored across all classes.
  std::size_t node_count() const;
  /// Distinct e-nodes ever inserted; nondecreasing.
  std::size_t enode_count() const { return inserted_; }
  std::optional<Constant> constant(ClassId id) const { return eclass(id).constant; }

  ENode canonical(const ENode& n) const;
  std::optional<ClassId> lookup(const ENode& n) const;
  const std::unordered_map<ENode, ClassId, ENodeHash>& hashcons() const { return hashcons_; }

  /// Every (class, substitution) where some e-node choice matches p. Requires a clean graph.
  std::vector<EMatch> ematch(const Pattern& p) const;
  std::vector<Subst> ematch_class(const Pattern& p, ClassId id) const;
  ClassId instantiate(const Pattern& p, const Subst& s);

 private:
  EClass& mutable_class(ClassId id);
  void repair(ClassId id);
  void normalize();
  std::optional<Constant> fold(const ENode& n) const;
  SymType node_type(const ENode& n) const;

  mutable std::vector<ClassId> parent_;
  std::vector<EClass> classes_;
  std::unordered_map<ENode, ClassId, ENodeHash> hashcons_;
  std::vector<ClassId> pending_;
  std::vector<ClassId> analysis_pending_;
  std::size_t inserted_ = 0;
};

/// Problems with the congruence and hashcons invariants; empty when they hold.
/// Only meaningful on a clean graph.
std::vector<std::string> check_invariants(const EGraph& eg);

struct SaturationLimits {
  std::size_t max_iterations = 30;
  std::size_t max_enodes = 10000;
  double timeout_ms = 5000;
};

enum class StopReason { Saturated, IterLimit, NodeLimit, Timeout };
std::string to_string(StopReason r);

struct SaturationReport {
  StopReason stop_reason = StopReason::Saturated;
  std::size_t iterations = 0;
  std::size_t enode_count = 0;
  std::map<std::string, std::size_t> rule_application_counts;
  /// enode_count after each iteration.
  std::vector<std::size_t> enode_history;
};

/// Called after every iteration's rebuild (used by invariant tests).
using IterationHook = std::function<void(const EGraph&, std::size_t iteration)>;

SaturationReport saturate(EGraph& eg, const std::vector<Rule>& rules, const SaturationLimits& limits,
                          const IterationHook& hook = {});

struct Extraction {
  Term tree;  // raw binary tree that was selected
  Term term;  // canonicalize(tree), or the tree itself when that hits an exact singularity
  double cost = 0;
};

/// Throws Error when the root has no finite-cost representative.
Extraction extract(const EGraph& eg, ClassId root, const CostModel& cm);

/// Minimal cost of every class (infinity when unreachable), by fixed-point relaxation.
std::vector<double> class_costs(const EGraph& eg, const CostModel& cm);

struct Optimization {
  Term term;
  Term tree;
  SaturationReport report;
  double before_cost = 0;
  double after_cost = 0;
};

Optimization optimize(const Term& t, const std::vector<Rule>& rules, const CostModel& cm,
                      const SaturationLimits& limits);

/// Identity, quotient, power-expansion and constant rules. Saturates on small inputs.
std::string_view arithmetic_rule_text();
/// Commutativity, associativity and distributivity of + and *.
std::string_view ac_rule_text();
std::vector<Rule> arithmetic_rules();
/// ac rules followed by the arithmetic rules. Usually stops on a limit rather than saturating.
std::vector<Rule> cycle_rules();

}  // namespace symx

#include "symx/egraph.hpp"

#include "symx/error.hpp"
#include "symx/hash.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <unordered_set>

namespace symx {

// ---- e-nodes -----------------------------------------------------------------------------

ENode ENode::make_leaf(Term t) {
  if (is_tree(t)) throw ContractError("e-node leaves must be constants or symbols");
  ENode n;
  n.leaf = std::move(t);
  return n;
}

ENode ENode::make_op(OpId op, std::vector<ClassId> children) {
  ENode n;
  n.op = op;
  n.children = std::move(children);
  return n;
}

bool ENode::operator==(const ENode& other) const {
  if (is_leaf() != other.is_leaf()) return false;
  if (is_leaf()) return leaf == other.leaf;
  return op == other.op && children == other.children;
}

std::size_t ENode::hash() const {
  if (is_leaf()) return hash_combine(0x1eafULL, leaf.hash());
  std::size_t h = hash_string(op.name());
  for (ClassId c : children) h = hash_combine(h, c);
  return h;
}

// ---- e-graph -----------------------------------------------------------------------------

ClassId EGraph::find(ClassId id) const {
  while (parent_[id] != id) id = parent_[id];
  return id;
}

const EClass& EGraph::eclass(ClassId id) const { return classes_[find(id)]; }

EClass& EGraph::mutable_class(ClassId id) { return classes_[find(id)]; }

ENode EGraph::canonical(const ENode& n) const {
  if (n.is_leaf()) return n;
  ENode c = n;
  for (ClassId& ch : c.children) ch = find(ch);
  return c;
}

std::optional<ClassId> EGraph::lookup(const ENode& n) const {
  auto it = hashcons_.find(canonical(n));
  if (it == hashcons_.end()) return std::nullopt;
  return find(it->second);
}

std::optional<Constant> EGraph::fold(const ENode& n) const {
  if (n.is_leaf()) {
    if (n.leaf.is_constant()) return n.leaf.value();
    return std::nullopt;
  }
  std::vector<Constant> v;
  for (ClassId c : n.children) {
    const auto& k = classes_[find(c)].constant;
    if (!k) return std::nullopt;
    v.push_back(*k);
  }
  try {
    switch (n.op.prim()) {
      case Prim::Add: {
        Constant s = v[0];
        for (std::size_t i = 1; i < v.size(); ++i) s = s + v[i];
        return s;
      }
      case Prim::Mul: {
        Constant p = v[0];
        for (std::size_t i = 1; i < v.size(); ++i) p = p * v[i];
        return p;
      }
      case Prim::Sub: return v.size() == 1 ? -v[0] : v[0] - v[1];
      case Prim::Div:
        if (v[1].is_zero()) return std::nullopt;
        return v[0] / v[1];
      case Prim::Pow: return Constant::pow(v[0], v[1]);
      case Prim::Abs: return v[0].abs();
      default: return std::nullopt;
    }
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

SymType EGraph::node_type(const ENode& n) const {
  if (n.is_leaf()) return n.leaf.symtype();
  const OpInfo& info = n.op.info();
  if (info.prim == Prim::User) return info.result;
  try {
    SymType t = classes_[find(n.children[0])].type;
    for (std::size_t i = 1; i < n.children.size(); ++i) t = join(t, classes_[find(n.children[i])].type);
    switch (info.prim) {
      case Prim::Add:
      case Prim::Mul:
      case Prim::Sub:
      case Prim::Abs:
      case Prim::Min:
      case Prim::Max: return t;
      case Prim::Div: return join(t, SymType::Kind::Rational);
      case Prim::Pow: {
        const auto& e = classes_[find(n.children[1])].constant;
        if (e && e->is_exact_integer()) return e->is_negative() ? join(t, SymType::Kind::Rational) : t;
        return join(t, SymType::Kind::Real);
      }
      default: return join(t, SymType::Kind::Real);
    }
  } catch (const TypeError&) {
    return SymType::Kind::Number;
  }
}

ClassId EGraph::add(ENode node) {
  node = canonical(node);
  if (auto it = hashcons_.find(node); it != hashcons_.end()) return find(it->second);
  const ClassId id = static_cast<ClassId>(classes_.size());
  EClass c;
  c.id = id;
  c.type = node_type(node);
  c.constant = fold(node);
  c.nodes.push_back(node);
  std::vector<ClassId> kids = node.children;
  std::sort(kids.begin(), kids.end());
  kids.erase(std::unique(kids.begin(), kids.end()), kids.end());
  for (ClassId k : kids) classes_[k].parents.emplace_back(node, id);
  const bool needs_leaf = c.constant && !node.is_leaf();
  classes_.push_back(std::move(c));
  parent_.push_back(id);
  hashcons_.emplace(node, id);
  ++inserted_;
  if (needs_leaf) analysis_pending_.push_back(id);
  return id;
}

ClassId EGraph::add_tree(const Term& tree) {
  if (tree.is_constant() || tree.is_symbol()) return add(ENode::make_leaf(tree));
  if (!tree.is_app()) return add_tree(lower_binary(tree));
  std::vector<ClassId> kids;
  for (const Term& a : tree.args()) kids.push_back(add_tree(a));
  return add(ENode::make_op(tree.op(), std::move(kids)));
}

ClassId EGraph::add_term(const Term& t) { return add_tree(lower_binary(t)); }

ClassId EGraph::merge(ClassId a, ClassId b) {
  a = find(a);
  b = find(b);
  if (a == b) return a;
  const std::size_t wa = classes_[a].nodes.size() + classes_[a].parents.size();
  const std::size_t wb = classes_[b].nodes.size() + classes_[b].parents.size();
  ClassId root = a;
  ClassId other = b;
  if (wb > wa || (wb == wa && b < a)) std::swap(root, other);
  parent_[other] = root;
  EClass& r = classes_[root];
  EClass& o = classes_[other];
  r.nodes.insert(r.nodes.end(), o.nodes.begin(), o.nodes.end());
  r.folded.insert(r.folded.end(), o.folded.begin(), o.folded.end());
  r.parents.insert(r.parents.end(), o.parents.begin(), o.parents.end());
  if (!r.constant && o.constant) {
    r.constant = o.constant;
    analysis_pending_.push_back(root);
  } else if (r.constant && !o.constant) {
    analysis_pending_.push_back(root);
  }
  if (o.type.is_subtype_of(r.type) && !(o.type == r.type)) r.type = o.type;
  o.nodes.clear();
  o.folded.clear();
  o.parents.clear();
  o.nodes.shrink_to_fit();
  o.folded.shrink_to_fit();
  o.parents.shrink_to_fit();
  pending_.push_back(root);
  return root;
}

void EGraph::repair(ClassId id) {
  std::vector<std::pair<ENode, ClassId>> parents = std::move(classes_[find(id)].parents);
  classes_[find(id)].parents.clear();
  for (const auto& [pn, pc] : parents) {
    auto it = hashcons_.find(pn);
    if (it != hashcons_.end() && find(it->second) == find(pc)) hashcons_.erase(it);
  }
  std::unordered_map<ENode, ClassId, ENodeHash> seen;
  std::vector<std::pair<ENode, ClassId>> fresh;
  for (const auto& [pn, pc] : parents) {
    ENode cn = canonical(pn);
    if (auto it = hashcons_.find(cn); it != hashcons_.end() && find(it->second) != find(pc)) merge(it->second, pc);
    hashcons_[cn] = find(pc);
    if (auto it = seen.find(cn); it != seen.end()) {
      if (find(it->second) != find(pc)) merge(it->second, pc);
      continue;
    }
    seen.emplace(cn, pc);
    fresh.emplace_back(cn, pc);
    EClass& parent_class = mutable_class(pc);
    if (!parent_class.constant) {
      if (auto k = fold(cn)) {
        parent_class.constant = k;
        analysis_pending_.push_back(find(pc));
        pending_.push_back(find(pc));
      }
    }
  }
  EClass& home = mutable_class(id);
  for (auto& [n, c] : fresh) home.parents.emplace_back(std::move(n), find(c));
}

void EGraph::normalize() {
  for (ClassId i = 0; i < parent_.size(); ++i) parent_[i] = find(i);
  hashcons_.clear();
  std::vector<std::pair<ClassId, ClassId>> collisions;
  for (ClassId id = 0; id < classes_.size(); ++id) {
    if (parent_[id] != id) continue;
    EClass& c = classes_[id];
    std::unordered_set<ENode, ENodeHash> seen;
    std::vector<ENode> nodes;
    std::vector<ENode> folded;
    auto keep = [&](const ENode& n) {
      ENode cn = canonical(n);
      if (!seen.insert(cn).second) return;
      if (c.constant && !cn.is_leaf()) {
        folded.push_back(std::move(cn));
      } else {
        nodes.push_back(std::move(cn));
      }
    };
    for (const ENode& n : c.nodes) keep(n);
    for (const ENode& n : c.folded) keep(n);
    c.nodes = std::move(nodes);
    c.folded = std::move(folded);
    for (const std::vector<ENode>* list : {&c.nodes, &c.folded}) {
      for (const ENode& n : *list) {
        auto [it, inserted] = hashcons_.emplace(n, id);
        if (!inserted && it->second != id) collisions.emplace_back(it->second, id);
      }
    }
    std::unordered_set<ENode, ENodeHash> pseen;
    std::vector<std::pair<ENode, ClassId>> ps;
    for (const auto& [n, pc] : c.parents) {
      ENode cn = canonical(n);
      if (pseen.insert(cn).second) ps.emplace_back(std::move(cn), find(pc));
    }
    c.parents = std::move(ps);
  }
  for (const auto& [a, b] : collisions) merge(a, b);
}

void EGraph::rebuild() {
  if (clean()) return;
  while (!clean()) {
    while (!pending_.empty() || !analysis_pending_.empty()) {
      while (!analysis_pending_.empty()) {
        const ClassId c = find(analysis_pending_.back());
        analysis_pending_.pop_back();
        const auto k = classes_[c].constant;
        if (!k) continue;
        const ClassId leaf = add(ENode::make_leaf(Term(*k)));
        merge(leaf, c);
      }
      std::vector<ClassId> todo;
      todo.swap(pending_);
      for (ClassId& c : todo) c = find(c);
      std::sort(todo.begin(), todo.end());
      todo.erase(std::unique(todo.begin(), todo.end()), todo.end());
      for (ClassId c : todo) repair(c);
    }
    normalize();
  }
}

std::vector<ClassId> EGraph::class_ids() const {
  std::vector<ClassId> out;
  for (ClassId i = 0; i < classes_.size(); ++i) {
    if (find(i) == i) out.push_back(i);
  }
  return out;
}

std::size_t EGraph::class_count() const { return class_ids().size(); }

std::size_t EGraph::node_count() const {
  std::size_t n = 0;
  for (ClassId id : class_ids()) n += classes_[id].nodes.size();
  return n;
}

// ---- e-matching --------------------------------------------------------------------------

namespace {

using SubstK = std::function<void(Subst&)>;

struct Matcher {
  const EGraph& eg;

  bool slot_ok(const Pattern& p, ClassId c) const {
    const EClass& cls = eg.eclass(c);
    for (const SlotPredicate& pred : p.predicates) {
      switch (pred.kind) {
        case SlotPredicate::Kind::IsConstant:
          if (!cls.constant) return false;
          break;
        case SlotPredicate::Kind::IntRange:
          if (!cls.constant || !pred.test(Term(*cls.constant))) return false;
          break;
        case SlotPredicate::Kind::TypeBound:
          if (!cls.type.is_subtype_of(pred.bound)) return false;
          break;
      }
    }
    return true;
  }

  bool literal_ok(const Term& lit, ClassId c) const {
    const EClass& cls = eg.eclass(c);
    if (lit.is_constant()) {
      if (cls.constant && *cls.constant == lit.value()) return true;
    }
    for (const ENode& n : cls.nodes) {
      if (!n.is_leaf()) continue;
      if (lit.is_symbol() ? (n.leaf.is_symbol() && n.leaf.name() == lit.name()) : n.leaf == lit) return true;
    }
    return false;
  }

  void run(const Pattern& p, ClassId c, Subst& s, const SubstK& k) const {
    c = eg.find(c);
    switch (p.kind) {
      case Pattern::Kind::Slot: {
        if (!slot_ok(p, c)) return;
        if (auto it = s.find(p.slot); it != s.end()) {
          if (eg.find(it->second) == c) k(s);
          return;
        }
        s.emplace(p.slot, c);
        k(s);
        s.erase(p.slot);
        return;
      }
      case Pattern::Kind::Literal:
        if (literal_ok(p.literal, c)) k(s);
        return;
      case Pattern::Kind::Node:
        for (const ENode& n : eg.eclass(c).nodes) {
          if (n.is_leaf() || !(n.op == p.op) || n.children.size() != p.args.size()) continue;
          seq(p.args, n.children, 0, s, k);
        }
        return;
    }
  }

  void seq(const std::vector<Pattern>& ps, const std::vector<ClassId>& cs, std::size_t i, Subst& s,
           const SubstK& k) const {
    if (i == ps.size()) {
      k(s);
      return;
    }
    run(ps[i], cs[i], s, [&](Subst& s2) { seq(ps, cs, i + 1, s2, k); });
  }
};

}  // namespace

std::vector<Subst> EGraph::ematch_class(const Pattern& p, ClassId id) const {
  std::vector<Subst> out;
  std::set<Subst> seen;
  Subst s;
  Matcher{*this}.run(p, id, s, [&](Subst& found) {
    if (seen.insert(found).second) out.push_back(found);
  });
  return out;
}

std::vector<EMatch> EGraph::ematch(const Pattern& p) const {
  std::vector<EMatch> out;
  for (ClassId id : class_ids()) {
    for (Subst& s : ematch_class(p, id)) out.push_back({id, std::move(s)});
  }
  return out;
}

ClassId EGraph::instantiate(const Pattern& p, const Subst& s) {
  switch (p.kind) {
    case Pattern::Kind::Slot: {
      auto it = s.find(p.slot);
      if (it == s.end()) throw ContractError("unbound slot ~" + p.slot);
      return find(it->second);
    }
    case Pattern::Kind::Literal: return add(ENode::make_leaf(p.literal));
    case Pattern::Kind::Node: {
      std::vector<ClassId> kids;
      for (const Pattern& a : p.args) kids.push_back(instantiate(a, s));
      return add(ENode::make_op(p.op, std::move(kids)));
    }
  }
  return 0;
}

std::vector<std::string> check_invariants(const EGraph& eg) {
  std::vector<std::string> out;
  std::unordered_map<ENode, ClassId, ENodeHash> owner;
  for (ClassId id : eg.class_ids()) {
    const EClass& c = eg.eclass(id);
    if (c.nodes.empty()) out.push_back("class " + std::to_string(id) + " is empty");
    std::vector<ENode> all = c.nodes;
    all.insert(all.end(), c.folded.begin(), c.folded.end());
    for (const ENode& n : all) {
      const ENode cn = eg.canonical(n);
      if (!(cn == n)) out.push_back("class " + std::to_string(id) + " holds a non-canonical e-node");
      auto [it, inserted] = owner.emplace(cn, id);
      if (!inserted && it->second != id) {
        out.push_back("congruent e-nodes in classes " + std::to_string(it->second) + " and " + std::to_string(id));
      }
      auto h = eg.hashcons().find(cn);
      if (h == eg.hashcons().end()) {
        out.push_back("e-node of class " + std::to_string(id) + " missing from the hashcons");
      } else if (eg.find(h->second) != id) {
        out.push_back("hashcons maps an e-node of class " + std::to_string(id) + " elsewhere");
      }
    }
  }
  for (const auto& [n, id] : eg.hashcons()) {
    if (!(eg.canonical(n) == n)) out.push_back("hashcons holds a non-canonical key");
  }
  return out;
}

// ---- saturation --------------------------------------------------------------------------

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::Saturated: return "saturated";
    case StopReason::IterLimit: return "iter-limit";
    case StopReason::NodeLimit: return "node-limit";
    case StopReason::Timeout: return "timeout";
  }
  return {};
}

SaturationReport saturate(EGraph& eg, const std::vector<Rule>& rules, const SaturationLimits& limits,
                          const IterationHook& hook) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed_ms = [&] { return std::chrono::duration<double, std::milli>(Clock::now() - start).count(); };
  SaturationReport report;
  for (const Rule& r : rules) report.rule_application_counts[r.name] = 0;
  eg.rebuild();
  for (std::size_t iter = 1;; ++iter) {
    if (iter > limits.max_iterations) {
      report.stop_reason = StopReason::IterLimit;
      break;
    }
    std::vector<std::pair<std::size_t, EMatch>> matches;
    bool timed_out = false;
    for (std::size_t ri = 0; ri < rules.size() && !timed_out; ++ri) {
      for (EMatch& m : eg.ematch(rules[ri].lhs)) matches.emplace_back(ri, std::move(m));
      timed_out = elapsed_ms() > limits.timeout_ms;
    }
    const std::size_t before = eg.enode_count();
    bool unions = false;
    bool node_limit = false;
    for (const auto& [ri, m] : matches) {
      if (eg.enode_count() > limits.max_enodes) {
        node_limit = true;
        break;
      }
      const ClassId id = eg.instantiate(rules[ri].rhs, m.subst);
      ++report.rule_application_counts[rules[ri].name];
      if (eg.find(id) != eg.find(m.eclass)) {
        eg.merge(id, m.eclass);
        unions = true;
      }
    }
    eg.rebuild();
    report.iterations = iter;
    report.enode_history.push_back(eg.enode_count());
    if (hook) hook(eg, iter);
    if (node_limit || eg.enode_count() > limits.max_enodes) {
      report.stop_reason = StopReason::NodeLimit;
      break;
    }
    if (!timed_out && !unions && eg.enode_count() == before) {
      report.stop_reason = StopReason::Saturated;
      break;
    }
    if (timed_out || elapsed_ms() > limits.timeout_ms) {
      report.stop_reason = StopReason::Timeout;
      break;
    }
  }
  report.enode_count = eg.enode_count();
  return report;
}

// ---- extraction --------------------------------------------------------------------------

namespace {

struct Best {
  double cost = std::numeric_limits<double>::infinity();
  std::size_t size = 0;
  Term tree;
  bool set = false;
};

std::vector<Best> relax(const EGraph& eg, const CostModel& cm) {
  std::vector<Best> best(eg.class_ids().empty() ? 0 : eg.class_ids().back() + 1);
  const std::vector<ClassId> ids = eg.class_ids();
  bool changed = true;
  while (changed) {
    changed = false;
    for (ClassId id : ids) {
      Best& b = best[id];
      for (const ENode& n : eg.eclass(id).nodes) {
        double cost = 0;
        std::size_t size = 1;
        if (n.is_leaf()) {
          cost = cm.leaf_cost;
        } else {
          cost = cm.weight(n.op);
          bool ready = true;
          for (ClassId ch : n.children) {
            const Best& cb = best[eg.find(ch)];
            if (!cb.set) {
              ready = false;
              break;
            }
            cost += cb.cost;
            size += cb.size;
          }
          if (!ready) continue;
        }
        if (b.set && (cost > b.cost || (cost == b.cost && size > b.size))) continue;
        Term tree;
        if (n.is_leaf()) {
          tree = n.leaf;
        } else {
          std::vector<Term> kids;
          for (ClassId ch : n.children) kids.push_back(best[eg.find(ch)].tree);
          tree = make_app(n.op, std::move(kids));
        }
        if (b.set && cost == b.cost && size == b.size && !((tree <=> b.tree) < 0)) continue;
        b = {cost, size, std::move(tree), true};
        changed = true;
      }
    }
  }
  return best;
}

}  // namespace

std::vector<double> class_costs(const EGraph& eg, const CostModel& cm) {
  std::vector<Best> best = relax(eg, cm);
  std::vector<double> out(best.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < best.size(); ++i) out[i] = best[i].cost;
  return out;
}

Extraction extract(const EGraph& eg, ClassId root, const CostModel& cm) {
  if (!eg.clean()) throw ContractError("extract needs a rebuilt e-graph");
  std::vector<Best> best = relax(eg, cm);
  const Best& b = best[eg.find(root)];
  if (!b.set) throw Error("extraction failed: class " + std::to_string(root) + " has no finite-cost term");
  try {
    return {b.tree, canonicalize(b.tree), b.cost};
  } catch (const DomainError&) {
    return {b.tree, b.tree, b.cost};
  }
}

Optimization optimize(const Term& t, const std::vector<Rule>& rules, const CostModel& cm,
                      const SaturationLimits& limits) {
  EGraph eg;
  const Term tree = lower_binary(t);
  const ClassId root = eg.add_tree(tree);
  Optimization out;
  out.before_cost = tree_cost(tree, cm);
  out.report = saturate(eg, rules, limits);
  Extraction ex = extract(eg, root, cm);
  out.tree = ex.tree;
  out.term = ex.term;
  out.after_cost = ex.cost;
  return out;
}

// ---- shipped ruleset ---------------------------------------------------------------------

std::string_view arithmetic_rule_text() {
  return R"(# Arithmetic rules over binary e-nodes.
sub-as-add:    ~a - ~b <=> ~a + -1*~b
neg-as-mul:    -~a <=> -1*~a
div-const:     ~x / ~c => ~x * (1/~c) where ~c::Constant
pow-expand:    ~x ^ ~n => ~x * ~x^(~n - 1) where ~n in 2..8
pow-one:       ~x ^ 1 => ~x
mul-one:       ~x * 1 => ~x
one-mul:       1 * ~x => ~x
add-zero:      ~x + 0 => ~x
zero-add:      0 + ~x => ~x
mul-zero:      ~x * 0 => 0
div-self:      ~x / ~x => 1
mul-div:       (~a * ~b) / ~c => ~a * (~b / ~c)
div-div:       ~a / ~b / ~c => ~a / (~b * ~c)
add-fractions: ~a/~b + ~c/~b => (~a + ~c)/~b
)";
}

std::string_view ac_rule_text() {
  return R"(# Commutativity, associativity and distributivity.
comm-add:      ~a + ~b => ~b + ~a
comm-mul:      ~a * ~b => ~b * ~a
assoc-add:     (~a + ~b) + ~c <=> ~a + (~b + ~c)
assoc-mul:     (~a * ~b) * ~c <=> ~a * (~b * ~c)
distribute:    ~a * (~b + ~c) <=> ~a*~b + ~a*~c
distribute-sub: ~a * (~b - ~c) <=> ~a*~b - ~a*~c
)";
}

std::vector<Rule> arithmetic_rules() {
  static const std::vector<Rule> rules = load_rules(arithmetic_rule_text(), PatternStyle::Binary);
  return rules;
}

std::vector<Rule> cycle_rules() {
  static const std::vector<Rule> rules = [] {
    std::vector<Rule> out = load_rules(ac_rule_text(), PatternStyle::Binary);
    for (const Rule& r : arithmetic_rules()) out.push_back(r);
    return out;
  }();
  return rules;
}

}  // namespace symx

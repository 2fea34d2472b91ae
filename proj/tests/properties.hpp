#pragma once

// Seeded property checks. Each returns how many cases ran and the first failure.

#include "support.hpp"

#include "symx/analysis.hpp"
#include "symx/calculus.hpp"
#include "symx/codegen.hpp"
#include "symx/cost.hpp"
#include "symx/egraph.hpp"
#include "symx/io.hpp"
#include "symx/rewrite.hpp"

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

namespace symx::testing {

struct PropertyResult {
  std::size_t cases = 0;    // cases actually checked
  std::size_t skipped = 0;  // e.g. too close to a singularity
  std::size_t failures = 0;
  std::string first_failure;

  bool ok() const { return failures == 0; }
  void fail(const std::string& what) {
    if (failures++ == 0) first_failure = what;
  }
  std::string summary() const {
    std::ostringstream os;
    os << cases << " cases";
    if (skipped) os << ", " << skipped << " skipped";
    os << ", " << failures << " failures";
    if (failures) os << " (first: " << first_failure << ")";
    return os.str();
  }
};

inline Env to_env(const Values& v) { return Env(v.begin(), v.end()); }

// ---- canonical forms -----------------------------------------------------------------------

/// Node invariants of Add and Mul, checked through the public accessors only.
inline void canonical_violations(const Term& t, std::vector<std::string>& out) {
  switch (t.kind()) {
    case Term::Kind::Constant:
    case Term::Kind::Symbol: return;
    case Term::Kind::Add:
    case Term::Kind::Mul: {
      const bool add = t.is_add();
      const auto entries = t.entries();
      const std::string where = (add ? "Add " : "Mul ") + print_expr(t);
      if (entries.empty()) out.push_back(where + ": empty map");
      for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& [key, c] = entries[i];
        if (key.is_constant()) out.push_back(where + ": constant key");
        if (add && key.is_add()) out.push_back(where + ": Add key inside Add");
        if (!add && key.is_mul()) out.push_back(where + ": Mul key inside Mul");
        if (c.is_zero() && c.is_exact()) out.push_back(where + ": zero coefficient");
        if (i > 0 && !(entries[i - 1].first < key)) out.push_back(where + ": keys not strictly ordered");
        canonical_violations(key, out);
      }
      const Constant& k = t.coeff();
      if (add && entries.size() == 1 && k.is_exact() && k.is_zero() && entries[0].second.is_exact() &&
          entries[0].second.is_one()) {
        out.push_back(where + ": uncollapsed single term");
      }
      if (!add && k.is_exact() && k.is_zero()) out.push_back(where + ": zero coefficient product");
      if (!add && entries.size() == 1 && k.is_exact() && k.is_one() && entries[0].second.is_exact() &&
          entries[0].second.is_one()) {
        out.push_back(where + ": uncollapsed single factor");
      }
      return;
    }
    case Term::Kind::Pow: {
      const Term& e = t.exponent();
      if (e.is_constant() && e.value().is_exact() && (e.value().is_zero() || e.value().is_one())) {
        out.push_back("Pow " + print_expr(t) + ": trivial exponent");
      }
      canonical_violations(t.base(), out);
      canonical_violations(e, out);
      return;
    }
    case Term::Kind::App:
      for (const Term& a : t.args()) canonical_violations(a, out);
      return;
  }
}

inline PropertyResult prop_canonical_nodes(std::uint64_t seed, std::size_t cases) {
  PropertyResult r;
  TermGen g(seed, symbol_pool(4));
  for (std::size_t i = 0; i < cases; ++i) {
    const Term t = g.canonical(6);
    std::vector<std::string> problems;
    canonical_violations(t, problems);
    const auto lib = validate_canonical(t);
    ++r.cases;
    if (!problems.empty()) r.fail(problems[0]);
    if (!lib.empty()) r.fail(lib[0]);
    // Rebuilding from the generic interface is the identity.
    if (is_tree(t)) {
      const auto& args = arguments(t);
      if (!(similar_term(t, operation(t), args) == t)) r.fail("similar_term rebuild changed " + print_expr(t));
    }
  }
  return r;
}

inline PropertyResult prop_semantics(std::uint64_t seed, std::size_t cases) {
  PropertyResult r;
  TermGen g(seed, symbol_pool(4));
  NaiveEval naive;
  while (r.cases < cases) {
    Term raw = g.raw(6);
    Term canon;
    try {
      canon = canonicalize(raw);
    } catch (const std::exception&) {
      ++r.skipped;
      continue;
    }
    const Values env = g.env();
    auto want = naive(raw, env);
    if (!want) {
      ++r.skipped;
      continue;
    }
    ++r.cases;
    const double got = evaluate(canon, to_env(env));
    if (!close(got, *want, 1e-10, 1e-12)) r.fail(print_expr(raw) + " gives " + std::to_string(got));
  }
  return r;
}

// ---- calculus ------------------------------------------------------------------------------

inline PropertyResult prop_derivative(std::uint64_t seed, std::size_t cases) {
  PropertyResult r;
  TermGen g(seed, symbol_pool(3), GenOptions{5, true, true, true});
  NaiveEval naive;
  while (r.cases < cases) {
    const Term t = g.canonical(5);
    const Term& v = g.symbols()[pick(g.rng(), g.symbols().size())];
    const Term d = derivative(t, v);
    Values env = g.env(-1.5, 1.5);
    const double x = env[v.name()];
    const double h = 1e-6 * std::max(1.0, std::fabs(x));
    Values lo = env, hi = env;
    lo[v.name()] = x - h;
    hi[v.name()] = x + h;
    auto f_lo = naive(t, lo);
    auto f_hi = naive(t, hi);
    auto f_x = naive(t, env);
    auto dd = naive(d, env);
    if (!f_lo || !f_hi || !f_x || !dd) {
      ++r.skipped;
      continue;
    }
    const double fd = (*f_hi - *f_lo) / (2 * h);
    // Central differences carry rounding error of order eps*|f|/h.
    const double noise = 1e-16 * std::max({std::fabs(*f_hi), std::fabs(*f_lo), 1.0}) / h;
    if (noise > 1e-6 * std::max(std::fabs(fd), 1e-3)) {
      ++r.skipped;
      continue;
    }
    ++r.cases;
    if (!close(*dd, fd, 1e-5, 1e-6)) {
      r.fail("d/d" + v.name() + " " + print_expr(t) + " = " + print_expr(d) + ": " + std::to_string(*dd) + " vs " +
             std::to_string(fd));
    }
  }
  return r;
}

// ---- rewriting -----------------------------------------------------------------------------

/// A pattern that matches t: random subterms become slots, the rest stays literal structure.
inline Pattern abstract_pattern(const Term& t, Rng& rng, int& next_slot) {
  if (pick(rng, 4) == 0) return Pattern::make_slot("s" + std::to_string(next_slot++));
  if (!is_tree(t)) return Pattern::make_literal(t);
  std::vector<Pattern> args;
  for (const Term& a : arguments(t)) args.push_back(abstract_pattern(a, rng, next_slot));
  return Pattern::make_node(operation(t), std::move(args));
}

inline PropertyResult prop_match_soundness(std::uint64_t seed, std::size_t cases) {
  PropertyResult r;
  TermGen g(seed, symbol_pool(3), GenOptions{5, false, true, false});
  std::size_t matched = 0;
  for (std::size_t i = 0; i < cases; ++i) {
    const Term t = g.canonical(5);
    int slots = 0;
    const Pattern p = abstract_pattern(t, g.rng(), slots);
    // Half the time, match against an unrelated term instead.
    const Term subject = pick(g.rng(), 2) ? t : g.canonical(5);
    ++r.cases;
    for (const Bindings& b : match_all(p, subject)) {
      ++matched;
      const Term back = canonicalize(instantiate(p, b));
      if (!(back == canonicalize(subject))) r.fail(p.str() + " on " + print_expr(subject) + " rebuilt " + print_expr(back));
    }
    if (subject == t && !match(p, t)) r.fail("pattern abstracted from " + print_expr(t) + " does not match it");
  }
  if (matched == 0) r.fail("no matches at all");
  return r;
}

// ---- code generation -----------------------------------------------------------------------

/// Stack simulation written independently of verify_bytecode.
inline std::string bytecode_problem(const Bytecode& bc) {
  long depth = 0;
  std::vector<bool> stored(bc.n_locals, false);
  for (const Instr& in : bc.code) {
    switch (in.code) {
      case OpCode::PushConst: ++depth; break;
      case OpCode::LoadArg:
        if (in.n >= bc.n_args) return "argument out of range";
        ++depth;
        break;
      case OpCode::LoadLocal:
        if (in.n >= bc.n_locals || !stored[in.n]) return "load before store";
        ++depth;
        break;
      case OpCode::StoreLocal:
        if (in.n >= bc.n_locals) return "local out of range";
        stored[in.n] = true;
        --depth;
        break;
      case OpCode::Call:
      case OpCode::Reduce: depth -= static_cast<long>(in.n) - 1; break;
      case OpCode::MakeArray:
        if (depth != static_cast<long>(in.n)) return "array count mismatch";
        break;
    }
    if (depth < 0) return "stack underflow";
  }
  if (depth != static_cast<long>(bc.n_outputs)) return "final depth " + std::to_string(depth);
  return {};
}

inline PropertyResult prop_bytecode(std::uint64_t seed, std::size_t cases) {
  PropertyResult r;
  TermGen g(seed, symbol_pool(5), GenOptions{7});
  for (std::size_t i = 0; i < cases; ++i) {
    std::vector<Term> exprs;
    const std::size_t n = 1 + pick(g.rng(), 3);
    for (std::size_t k = 0; k < n; ++k) exprs.push_back(g.canonical(7));
    const Bytecode bc = lower_to_bytecode(build_function(exprs, g.symbols()));
    ++r.cases;
    auto lib = verify_bytecode(bc);
    const std::string own = bytecode_problem(bc);
    if (!lib.empty()) r.fail(lib[0]);
    if (!own.empty()) r.fail(own + " for " + print_expr(exprs[0]));
  }
  return r;
}

inline PropertyResult prop_vm_interpreter(std::uint64_t seed, std::size_t cases) {
  PropertyResult r;
  TermGen g(seed, symbol_pool(5), GenOptions{7});
  NaiveEval guard;
  while (r.cases < cases) {
    const Term t = g.canonical(7);
    const Bytecode bc = lower_to_bytecode(build_function({t}, g.symbols()));
    const Values env = g.env();
    if (!guard(t, env)) {
      ++r.skipped;
      continue;
    }
    std::vector<double> args;
    for (const Term& s : g.symbols()) args.push_back(env.at(s.name()));
    ++r.cases;
    const double vm = exec_bytecode(bc, args).at(0);
    const double ref = evaluate(t, to_env(env));
    if (!close(vm, ref, 1e-12)) r.fail(print_expr(t) + ": vm " + std::to_string(vm) + " vs " + std::to_string(ref));
  }
  return r;
}

// ---- text round trips ----------------------------------------------------------------------

inline PropertyResult prop_print_parse(std::uint64_t seed, std::size_t cases) {
  PropertyResult r;
  std::vector<Term> syms = {make_symbol("a", SymType::Kind::Real), make_symbol("n", SymType::Kind::Integer),
                            make_symbol("x"), make_symbol("y")};
  TermGen g(seed, syms);
  for (std::size_t i = 0; i < cases; ++i) {
    const Term t = g.canonical(6);
    Decls decls;
    for (const Term& s : syms) decls.declare_symbol(s.name(), s.symtype());
    const std::string text = print_expr(t);
    ++r.cases;
    try {
      const Term back = parse_expr(text, decls);
      if (!(back == t)) r.fail(text + " reparsed as " + print_expr(back));
    } catch (const std::exception& e) {
      r.fail(text + ": " + e.what());
    }
  }
  return r;
}

inline PropertyResult prop_sexpr(std::uint64_t seed, std::size_t cases) {
  PropertyResult r;
  std::vector<Term> syms = {make_symbol("a", SymType::Kind::Real), make_symbol("x"), make_symbol("y")};
  TermGen g(seed, syms);
  for (std::size_t i = 0; i < cases; ++i) {
    const Term t = g.canonical(6);
    const FuncDef f = build_function({t}, syms);
    const std::string text = render_source(f, Dialect::Sexpr);
    ++r.cases;
    try {
      const FuncDef back = parse_sexpr_function(text, syms);
      const Term body = canonicalize(std::get<IRExpr>(back.body->value).term);
      if (!(body == t) || back.params != f.params || back.name != f.name) r.fail(text);
    } catch (const std::exception& e) {
      r.fail(text + ": " + e.what());
    }
  }
  return r;
}

// ---- e-graphs ------------------------------------------------------------------------------

/// Congruence and hashcons invariants, checked through the public accessors only.
inline std::string egraph_problem(const EGraph& eg) {
  std::map<std::tuple<std::string, std::string, std::vector<ClassId>>, ClassId> seen;
  auto key = [](const ENode& n) {
    return n.is_leaf() ? std::make_tuple(std::string("leaf"), n.leaf.is_constant() ? "#" + n.leaf.value().str() : n.leaf.name(),
                                         std::vector<ClassId>{})
                       : std::make_tuple(n.op.name(), std::string(), n.children);
  };
  std::size_t stored = 0;
  for (ClassId id : eg.class_ids()) {
    if (eg.find(id) != id) return "class_ids lists a non-root id";
    const EClass& c = eg.eclass(id);
    if (c.nodes.empty()) return "empty class " + std::to_string(id);
    for (const auto* list : {&c.nodes, &c.folded}) {
      for (const ENode& n : *list) {
        ++stored;
        for (ClassId ch : n.children) {
          if (eg.find(ch) != ch) return "non-canonical child in class " + std::to_string(id);
        }
        auto [it, fresh] = seen.emplace(key(n), id);
        if (!fresh && it->second != id) return "congruent e-nodes in classes " + std::to_string(it->second) + " and " + std::to_string(id);
        auto hc = eg.hashcons().find(n);
        if (hc == eg.hashcons().end()) return "e-node missing from the hashcons";
        if (eg.find(hc->second) != id) return "hashcons points at the wrong class";
      }
    }
  }
  for (const auto& [n, id] : eg.hashcons()) {
    for (ClassId ch : n.children) {
      if (eg.find(ch) != ch) return "non-canonical hashcons key";
    }
    if (!seen.contains(key(n))) return "hashcons key not stored in any class";
  }
  if (stored < eg.hashcons().size()) return "hashcons larger than the stored e-nodes";
  return {};
}

inline PropertyResult prop_egraph_invariants(std::uint64_t seed, std::size_t cases) {
  PropertyResult r;
  TermGen g(seed, symbol_pool(3), GenOptions{6, false, true, false});
  const std::vector<Rule> arithmetic = arithmetic_rules();
  const std::vector<Rule> cycle = cycle_rules();
  for (std::size_t i = 0; i < cases; ++i) {
    EGraph eg;
    eg.add_tree(g.raw(6));
    if (pick(g.rng(), 2)) eg.add_term(g.canonical(5));
    const bool ac = i % 4 == 0;
    SaturationLimits limits{ac ? 5u : 10u, ac ? 2500u : 4000u, 1e9};
    std::size_t checks = 0;
    saturate(eg, ac ? cycle : arithmetic, limits, [&](const EGraph& e, std::size_t iter) {
      ++checks;
      const std::string own = egraph_problem(e);
      const auto lib = check_invariants(e);
      if (!own.empty()) r.fail("iteration " + std::to_string(iter) + ": " + own);
      if (!lib.empty()) r.fail("iteration " + std::to_string(iter) + ": " + lib[0]);
    });
    ++r.cases;
    if (checks == 0) r.fail("hook never ran");
  }
  return r;
}

// ---- extraction ----------------------------------------------------------------------------

struct RandomEGraph {
  EGraph eg;
  ClassId root = 0;
  CostModel cm;
};

/// Layered e-graph over symbol leaves: each class draws its children from lower layers, and
/// classes are formed by merging e-nodes of the same layer. Representable trees have depth <= 4.
inline RandomEGraph random_layered_egraph(Rng& rng) {
  static const std::vector<std::pair<OpId, int>> ops = {
      {OpId::add(), 2}, {OpId::sub(), 2}, {OpId::mul(), 2}, {OpId::div(), 2},
      {OpId::sub(), 1}, {OpId::of(Prim::Sin), 1}, {OpId::of(Prim::Exp), 1}, {OpId::of(Prim::Sqrt), 1}};
  RandomEGraph g;
  g.cm = CostModel::defaults();
  g.cm.leaf_cost = static_cast<double>(1 + pick(rng, 3));
  for (const char* name : {"+", "-", "*", "/", "sin", "exp", "sqrt"}) g.cm.weights[name] = static_cast<double>(pick(rng, 40));
  std::vector<std::vector<ClassId>> layers(1);
  const auto syms = symbol_pool(3);
  for (const Term& s : syms) layers[0].push_back(g.eg.add(ENode::make_leaf(s)));
  if (pick(rng, 3) == 0) g.eg.merge(layers[0][0], layers[0][1]);
  g.eg.rebuild();
  const std::size_t top = 1 + pick(rng, 3);
  for (std::size_t level = 1; level <= top; ++level) {
    layers.emplace_back();
    const std::size_t width = level == top ? 1 : 2 + pick(rng, 2);
    for (std::size_t c = 0; c < width; ++c) {
      std::optional<ClassId> cls;
      const std::size_t members = 1 + pick(rng, 2);
      for (std::size_t m = 0; m < members; ++m) {
        const auto& [op, arity] = ops[pick(rng, ops.size())];
        std::vector<ClassId> kids;
        for (int k = 0; k < arity; ++k) {
          const std::size_t from = k == 0 ? level - 1 : pick(rng, level);
          kids.push_back(g.eg.find(layers[from][pick(rng, layers[from].size())]));
        }
        const ENode n = ENode::make_op(op, kids);
        if (g.eg.lookup(n)) continue;
        const ClassId id = g.eg.add(n);
        cls = cls ? g.eg.merge(*cls, id) : id;
      }
      if (cls) layers.back().push_back(*cls);
    }
    g.eg.rebuild();
    if (layers.back().empty()) {
      const ENode n = ENode::make_op(OpId::of(Prim::Cos), {g.eg.find(layers[level - 1][0])});
      layers.back().push_back(g.eg.add(n));
      g.eg.rebuild();
    }
  }
  g.root = g.eg.find(layers.back()[0]);
  return g;
}

/// Cost of every representable tree of a class, by exhaustive enumeration.
/// Returns nullopt when the class is cyclic or represents trees deeper than max_depth.
class TreeEnumerator {
 public:
  TreeEnumerator(const EGraph& eg, const CostModel& cm, std::size_t max_depth) : eg_(eg), cm_(cm), max_depth_(max_depth) {}

  std::optional<std::vector<double>> costs(ClassId id, std::size_t depth = 1) {
    id = eg_.find(id);
    if (depth > max_depth_ || active_.contains(id)) return std::nullopt;
    if (auto it = memo_.find(id); it != memo_.end()) return it->second;
    active_.insert(id);
    std::vector<double> out;
    bool ok = true;
    for (const ENode& n : eg_.eclass(id).nodes) {
      if (n.is_leaf()) {
        out.push_back(cm_.leaf_cost);
        continue;
      }
      std::vector<double> partial = {cm_.weights.at(n.op.name())};
      for (ClassId ch : n.children) {
        auto sub = costs(ch, depth + 1);
        if (!sub) {
          ok = false;
          break;
        }
        std::vector<double> next;
        next.reserve(partial.size() * sub->size());
        for (double p : partial) {
          for (double c : *sub) next.push_back(p + c);
        }
        partial = std::move(next);
      }
      if (!ok) break;
      out.insert(out.end(), partial.begin(), partial.end());
    }
    active_.erase(id);
    if (!ok) return std::nullopt;
    // Depth-dependent truncation makes results context-sensitive; only memoize full answers.
    if (depth == 1) memo_[id] = out;
    return out;
  }

 private:
  const EGraph& eg_;
  const CostModel& cm_;
  std::size_t max_depth_;
  std::set<ClassId> active_;
  std::map<ClassId, std::vector<double>> memo_;
};

/// Whether `tree` is one of the trees a class represents.
inline bool represents(const EGraph& eg, ClassId id, const Term& tree) {
  for (const ENode& n : eg.eclass(id).nodes) {
    if (n.is_leaf()) {
      if (n.leaf == tree) return true;
      continue;
    }
    if (!tree.is_app() || !(tree.op() == n.op) || tree.args().size() != n.children.size()) continue;
    bool all = true;
    for (std::size_t i = 0; all && i < n.children.size(); ++i) all = represents(eg, n.children[i], tree.args()[i]);
    if (all) return true;
  }
  return false;
}

inline double own_tree_cost(const Term& tree, const CostModel& cm) {
  if (!tree.is_app()) return cm.leaf_cost;
  double c = cm.weights.at(tree.op().name());
  for (const Term& a : tree.args()) c += own_tree_cost(a, cm);
  return c;
}

inline PropertyResult prop_extraction_minimality(std::uint64_t seed, std::size_t graphs) {
  PropertyResult r;
  Rng rng(seed);
  std::size_t attempts = 0;
  while (r.cases < graphs && attempts++ < graphs * 20) {
    RandomEGraph g = random_layered_egraph(rng);
    TreeEnumerator all(g.eg, g.cm, 4);
    auto costs = all.costs(g.root);
    if (!costs || costs->empty()) {
      ++r.skipped;
      continue;
    }
    ++r.cases;
    const double best = *std::min_element(costs->begin(), costs->end());
    const Extraction e = extract(g.eg, g.root, g.cm);
    const std::string where = "graph " + std::to_string(r.cases) + " (" + std::to_string(costs->size()) + " trees)";
    if (e.cost != best) r.fail(where + ": extracted cost " + std::to_string(e.cost) + ", minimum " + std::to_string(best));
    if (own_tree_cost(e.tree, g.cm) != e.cost) r.fail(where + ": reported cost differs from the tree's cost");
    if (!represents(g.eg, g.root, e.tree)) r.fail(where + ": extracted tree is not in the root class");
    if (class_costs(g.eg, g.cm)[g.root] != best) r.fail(where + ": class_costs disagrees");
  }
  if (r.cases < graphs) r.fail("only " + std::to_string(r.cases) + " usable graphs");
  return r;
}

}  // namespace symx::testing

#include "doctest.h"
#include "properties.hpp"

#include "symx/error.hpp"

using namespace symx;
using namespace symx::testing;

namespace {

const Term a = make_symbol("a");
const Term x = make_symbol("x");
const Term y = make_symbol("y");

Term raw_expr(std::string_view text) {
  Decls decls(Decls::Mode::Implicit);
  return parse_expr(text, decls, ParseOptions{false});
}

ClassId leaf(EGraph& eg, const Term& t) { return eg.add(ENode::make_leaf(t)); }

// Partition of the given ids under eg.find, as a sorted list of groups.
std::set<std::set<ClassId>> partition(const EGraph& eg, const std::vector<ClassId>& ids) {
  std::map<ClassId, std::set<ClassId>> groups;
  for (ClassId id : ids) groups[eg.find(id)].insert(id);
  std::set<std::set<ClassId>> out;
  for (auto& [root, members] : groups) out.insert(members);
  return out;
}

}  // namespace

TEST_CASE("add_term deduplicates") {
  EGraph eg;
  const ClassId first = eg.add_term(x + y);
  const ClassId second = eg.add_term(x + y);
  CHECK(first == second);
  const std::size_t before = eg.node_count();
  eg.add_term(y + x);
  CHECK(eg.node_count() == before);
  const ClassId leaf_x = eg.add_term(x);
  CHECK(eg.eclass(leaf_x).nodes.size() == 1);
  CHECK(eg.eclass(leaf_x).nodes[0].is_leaf());
}

TEST_CASE("a*(2*3)/6 inserts as a quotient") {
  EGraph eg;
  const ClassId root = eg.add_tree(raw_expr("a*(2*3)/6"));
  eg.rebuild();
  const ClassId num = eg.add_tree(raw_expr("a*(2*3)"));
  const ClassId six = eg.add_tree(Term(6));
  CHECK(eg.lookup(ENode::make_op(OpId::div(), {num, six})) == eg.find(root));
  // Constant folding already identifies 2*3 with 6.
  CHECK(eg.find(eg.add_tree(raw_expr("2*3"))) == eg.find(six));
  CHECK(check_invariants(eg).empty());
}

TEST_CASE("merge") {
  EGraph eg;
  const ClassId cx = leaf(eg, x);
  CHECK(eg.merge(cx, cx) == cx);
  CHECK(eg.pending() == 0);

  const ClassId cy = leaf(eg, y);
  const OpId f = OpId::declare("f", 1);
  const ClassId fx = eg.add(ENode::make_op(f, {cx}));
  const ClassId fy = eg.add(ENode::make_op(f, {cy}));
  CHECK(eg.find(fx) != eg.find(fy));
  eg.merge(cx, cy);
  eg.rebuild();
  CHECK(eg.find(fx) == eg.find(fy));
  CHECK(egraph_problem(eg).empty());
  CHECK(check_invariants(eg).empty());
  CHECK(eg.clean());
}

TEST_CASE("merging 6 with 2*3 exposes ~x/~x") {
  EGraph eg;
  const ClassId root = eg.add_tree(raw_expr("a*(2*3)/6"));
  eg.rebuild();
  const auto matches = eg.ematch(parse_pattern("~x * ~y / ~y", PatternStyle::Binary));
  REQUIRE(matches.size() == 1);
  CHECK(matches[0].eclass == eg.find(root));
  CHECK(matches[0].subst.at("x") == eg.find(eg.add_tree(a)));
}

TEST_CASE("rebuild") {
  EGraph eg;
  eg.add_term(x * y + 1);
  const std::size_t classes = eg.class_count();
  eg.rebuild();
  CHECK(eg.class_count() == classes);
  CHECK(eg.clean());

  // k merges then one rebuild gives the same equivalences as rebuilding after each.
  Rng rng(31);
  for (int round = 0; round < 50; ++round) {
    TermGen g(100 + round, symbol_pool(3), GenOptions{4, false, true, false});
    std::vector<Term> terms;
    for (int i = 0; i < 6; ++i) terms.push_back(g.raw(4));
    EGraph once, each;
    std::vector<ClassId> ids;
    for (const Term& t : terms) {
      ids.push_back(once.add_tree(t));
      each.add_tree(t);
    }
    // Every subterm class, so the comparison covers congruence merges. Only classes without a
    // folded constant are merged: identifying 3 with -1 would make the analysis inconsistent.
    const auto all = once.class_ids();
    std::vector<ClassId> symbolic;
    for (ClassId id : all) {
      if (!once.constant(id)) symbolic.push_back(id);
    }
    std::vector<std::pair<ClassId, ClassId>> merges;
    for (int k = 0; k < 4; ++k) merges.emplace_back(symbolic[pick(rng, symbolic.size())], symbolic[pick(rng, symbolic.size())]);
    for (auto [p, q] : merges) once.merge(p, q);
    once.rebuild();
    for (auto [p, q] : merges) {
      each.merge(p, q);
      each.rebuild();
    }
    CHECK(partition(once, all) == partition(each, all));
    CHECK(egraph_problem(once).empty());
    CHECK(egraph_problem(each).empty());
  }
}

TEST_CASE("ematch") {
  EGraph eg;
  const ClassId prod = eg.add_tree(make_app(OpId::mul(), {y, Term(1)}));
  eg.add_tree(make_app(OpId::add(), {x, y}));
  eg.rebuild();
  const auto m = eg.ematch(parse_pattern("~x * 1", PatternStyle::Binary));
  REQUIRE(m.size() == 1);
  CHECK(m[0].eclass == eg.find(prod));
  CHECK(m[0].subst == Subst{{"x", eg.find(eg.add_tree(y))}});
  CHECK(eg.ematch(Pattern::make_slot("x")).size() == eg.class_count());
  CHECK(eg.ematch(parse_pattern("~x * ~x", PatternStyle::Binary)).empty());
}

TEST_CASE("saturate on a*(2*3)/6") {
  EGraph eg;
  const ClassId root = eg.add_tree(raw_expr("a*(2*3)/6"));
  const SaturationReport r = saturate(eg, arithmetic_rules(), SaturationLimits{});
  CHECK(r.stop_reason == StopReason::Saturated);
  CHECK(r.iterations <= 20);
  CHECK(r.enode_count <= 10000);
  CHECK(eg.find(root) == eg.find(eg.add_tree(a)));
  const Extraction e = extract(eg, root, CostModel::defaults());
  CHECK(e.term == a);
  CHECK(e.cost == 1.0);
}

TEST_CASE("saturate with no rules") {
  EGraph eg;
  eg.add_term(x * y);
  const SaturationReport r = saturate(eg, {}, SaturationLimits{});
  CHECK(r.stop_reason == StopReason::Saturated);
  CHECK(r.iterations == 1);
  CHECK(r.rule_application_counts.empty());
}

TEST_CASE("an explosive rule stops on the node limit") {
  EGraph eg;
  eg.add_term(x);
  const auto rules = load_rules("grow: ~x => (~x + 1) - 1", PatternStyle::Binary);
  const SaturationReport r = saturate(eg, rules, SaturationLimits{100, 50, 5000});
  CHECK(r.stop_reason == StopReason::NodeLimit);
  CHECK(r.enode_count >= 50);
  // x => x + 0 alone does not grow: x + 0 is one new e-node, then hashconsing closes the loop.
  EGraph small;
  small.add_term(x);
  const auto add0 = load_rules("add0: ~x <=> ~x + 0", PatternStyle::Binary);
  CHECK(saturate(small, add0, SaturationLimits{100, 50, 5000}).stop_reason == StopReason::Saturated);
}

TEST_CASE("iteration and time limits") {
  EGraph eg;
  eg.add_term(raw_expr("a*b*c*d + a*b*c + a*b + a"));
  const SaturationReport r = saturate(eg, cycle_rules(), SaturationLimits{2, 100000, 60000});
  CHECK(r.stop_reason == StopReason::IterLimit);
  CHECK(r.iterations == 2);
  EGraph slow;
  slow.add_term(raw_expr("a*b*c*d*e*f + a*b*c*d*e + a*b*c + a*b + a"));
  const SaturationReport t = saturate(slow, cycle_rules(), SaturationLimits{1000, 100000000, 1});
  CHECK(t.stop_reason == StopReason::Timeout);
}

TEST_CASE("extract") {
  EGraph single;
  const ClassId cx = single.add_term(x);
  const Extraction ex = extract(single, cx, CostModel::defaults());
  CHECK(ex.term == x);
  CHECK(ex.cost == 1.0);

  EGraph eg;
  const ClassId prod = eg.add_tree(make_app(OpId::mul(), {x, Term(2)}));
  const ClassId sum = eg.add_tree(make_app(OpId::add(), {x, x}));
  eg.merge(prod, sum);
  eg.rebuild();
  const Extraction e = extract(eg, prod, CostModel::defaults());
  CHECK(e.tree == make_app(OpId::add(), {x, x}));
  CHECK(e.cost == 3.0);
  CHECK(e.term == 2 * x);

  // x = sin(x) makes the class cyclic, but the leaf still anchors it.
  EGraph loop;
  const ClassId l0 = loop.add_term(x);
  const ClassId l1 = loop.add(ENode::make_op(OpId::of(Prim::Sin), {l0}));
  loop.merge(l0, l1);
  loop.rebuild();
  CHECK(extract(loop, l1, CostModel::defaults()).term == x);
}

TEST_CASE("cost model") {
  const CostModel cm = CostModel::defaults();
  CHECK(cycle_cost(x, cm) == 1.0);
  CHECK(cycle_cost(x + y + make_symbol("z"), cm) == 5.0);
  CHECK(cycle_cost(x / y, cm) == 32.0);
  CHECK(cycle_cost(pow(x, Term(2)), cm) == 62.0);
  CHECK(cycle_cost(x - y, cm) == 3.0);
  CHECK(cycle_cost(symx::sin(x), cm) == 101.0);
  const CostModel custom = CostModel::parse("# cheap division\n/ = 2\nleaf = 0\n");
  CHECK(cycle_cost(x / y, custom) == 2.0);
  CHECK(custom.weight("*") == 3.0);
  CostModel empty;
  CHECK_THROWS_WITH_AS(empty.weight(OpId::add()), doctest::Contains("+"), Error);
  CHECK_THROWS_AS(CostModel::parse("+ = fast"), Error);
  const Term g = make_app(OpId::declare("g", 1), {x});
  CHECK_THROWS_WITH(cycle_cost(g, cm), doctest::Contains("g"));
}

TEST_CASE("optimize") {
  const CostModel cm = CostModel::defaults();
  const Optimization sq = optimize(pow(x, Term(2)), arithmetic_rules(), cm, SaturationLimits{});
  CHECK(sq.tree == make_app(OpId::mul(), {x, x}));
  CHECK(sq.before_cost == 62.0);
  CHECK(sq.after_cost == 5.0);

  const Optimization same = optimize(x + y, arithmetic_rules(), cm, SaturationLimits{});
  CHECK(same.after_cost == same.before_cost);
  CHECK(same.term == x + y);

  const Optimization fig = optimize(raw_expr("a*(2*3)/6"), arithmetic_rules(), cm, SaturationLimits{});
  CHECK(fig.term == a);
  CHECK(fig.after_cost == 1.0);
  CHECK(fig.report.stop_reason == StopReason::Saturated);
}

TEST_CASE("invariants hold after every saturation iteration") {
  const auto r = prop_egraph_invariants(41, 1000);
  INFO(r.summary());
  CHECK(r.cases == 1000);
  CHECK(r.ok());
}

TEST_CASE("extraction is minimal on enumerable graphs") {
  const auto r = prop_extraction_minimality(42, 300);
  INFO(r.summary());
  CHECK(r.cases == 300);
  CHECK(r.ok());
}

TEST_CASE("extracted representatives evaluate like the input") {
  TermGen g(43, symbol_pool(3), GenOptions{5, false, true, false});
  NaiveEval naive;
  Rng rng(44);
  std::size_t checked = 0;
  for (int i = 0; i < 150; ++i) {
    const Term input = g.raw(5);
    EGraph eg;
    const ClassId root = eg.add_tree(input);
    saturate(eg, arithmetic_rules(), SaturationLimits{10, 3000, 2000});
    std::vector<CostModel> models = {CostModel::defaults()};
    for (int m = 0; m < 3; ++m) {
      CostModel cm = CostModel::defaults();
      for (auto& [op, w] : cm.weights) w = static_cast<double>(pick(rng, 100));
      models.push_back(cm);
    }
    std::vector<Term> reps;
    for (const CostModel& cm : models) {
      try {
        reps.push_back(extract(eg, root, cm).tree);
      } catch (const Error&) {
      }
    }
    for (int k = 0; k < 20; ++k) {
      const Values env = g.env();
      auto want = naive(input, env);
      if (!want) continue;
      for (const Term& rep : reps) {
        auto got = naive(rep, env);
        if (!got) continue;
        ++checked;
        INFO(print_expr(input) << " vs " << print_expr(rep));
        CHECK(close(*got, *want, 1e-10, 1e-12));
      }
    }
  }
  CHECK(checked > 5000);
}

TEST_CASE("enode counts never decrease and saturation is stable") {
  TermGen g(45, symbol_pool(3), GenOptions{5, false, true, false});
  for (int i = 0; i < 100; ++i) {
    EGraph eg;
    const Term t = g.raw(5);
    eg.add_tree(t);
    const SaturationReport r = saturate(eg, arithmetic_rules(), SaturationLimits{20, 5000, 5000});
    for (std::size_t k = 1; k < r.enode_history.size(); ++k) CHECK(r.enode_history[k - 1] <= r.enode_history[k]);
    if (r.stop_reason == StopReason::Saturated) {
      const std::size_t classes = eg.class_count();
      const std::size_t nodes = eg.node_count();
      const SaturationReport again = saturate(eg, arithmetic_rules(), SaturationLimits{1, 5000, 5000});
      CHECK(again.stop_reason == StopReason::Saturated);
      CHECK(eg.class_count() == classes);
      CHECK(eg.node_count() == nodes);
    }
  }
}

TEST_CASE("after_cost never exceeds before_cost") {
  TermGen g(46, symbol_pool(3), GenOptions{6, true, true, true});
  const CostModel cm = CostModel::defaults();
  for (int i = 0; i < 200; ++i) {
    const Term t = g.canonical(6);
    const Optimization o = optimize(t, arithmetic_rules(), cm, SaturationLimits{10, 3000, 2000});
    CHECK(o.after_cost <= o.before_cost);
    CHECK(o.before_cost == cycle_cost(t, cm));
    CHECK(o.after_cost == tree_cost(o.tree, cm));
  }
}

TEST_CASE("optimize is deterministic") {
  TermGen g(47, symbol_pool(4), GenOptions{6, false, true, true});
  const CostModel cm = CostModel::defaults();
  for (int i = 0; i < 30; ++i) {
    const Term t = g.canonical(6);
    const SaturationLimits limits{6, 4000, 1e9};
    const Optimization p = optimize(t, cycle_rules(), cm, limits);
    const Optimization q = optimize(t, cycle_rules(), cm, limits);
    CHECK(p.tree == q.tree);
    CHECK(p.after_cost == q.after_cost);
    CHECK(p.report.iterations == q.report.iterations);
    CHECK(p.report.enode_count == q.report.enode_count);
    CHECK(p.report.rule_application_counts == q.report.rule_application_counts);
    CHECK(p.report.stop_reason == q.report.stop_reason);
  }
}

#include "doctest.h"
#include "properties.hpp"

#include "symx/error.hpp"

#include <cmath>

using namespace symx;
using namespace symx::testing;

namespace {

const Term x = make_symbol("x");
const Term y = make_symbol("y");
const Term z = make_symbol("z");

std::vector<double> run(const std::vector<Term>& exprs, const std::vector<Term>& params, std::vector<double> args) {
  return exec_bytecode(lower_to_bytecode(build_function(exprs, params)), args);
}

bool has_call(const Bytecode& bc, const OpId& op) {
  for (const Instr& in : bc.code) {
    if (in.code == OpCode::Call && in.op == op) return true;
  }
  return false;
}

MapReduce sum_of(const Term& body, const Term& p, std::vector<Term> over, OpId op = OpId::add(), Constant init = 0) {
  MapReduce mr;
  FuncDef map;
  map.name = "m";
  map.params = {p};
  map.body = ir(IRExpr{body});
  mr.map = std::make_shared<const FuncDef>(std::move(map));
  mr.reduce = op;
  mr.init = init;
  MakeArray arr;
  for (const Term& t : over) arr.elements.push_back(IRExpr{t});
  mr.over = ir(std::move(arr));
  return mr;
}

}  // namespace

TEST_CASE("build_function") {
  const FuncDef f = build_function({x + y}, {x, y});
  CHECK(f.name == "f");
  CHECK(f.params == std::vector<Term>{x, y});
  CHECK(std::get<IRExpr>(f.body->value).term == x + y);
  const FuncDef g = build_function({x * y, y}, {x, y});
  REQUIRE(std::holds_alternative<MakeArray>(g.body->value));
  CHECK(std::get<MakeArray>(g.body->value).elements.size() == 2);
  CHECK_THROWS_WITH_AS(build_function({x + z}, {x}), doctest::Contains("z"), Error);
  CHECK_THROWS_AS(build_function({x}, {x, x}), Error);
  CHECK_NOTHROW(check_function(g));
}

TEST_CASE("lower_to_bytecode") {
  const Bytecode id = lower_to_bytecode(build_function({x}, {x}));
  REQUIRE(id.code.size() == 1);
  CHECK(id.code[0].code == OpCode::LoadArg);
  CHECK(id.code[0].n == 0);

  const Bytecode sum = lower_to_bytecode(build_function({x + y}, {x, y}));
  REQUIRE(sum.code.size() == 3);
  CHECK((sum.code[0].code == OpCode::LoadArg && sum.code[0].n == 0));
  CHECK((sum.code[1].code == OpCode::LoadArg && sum.code[1].n == 1));
  CHECK((sum.code[2].code == OpCode::Call && sum.code[2].op == OpId::add() && sum.code[2].n == 2));

  const Term cube = pow(x, Term(3));
  const Bytecode c = lower_to_bytecode(build_function({cube}, {x}));
  CHECK_FALSE(has_call(c, OpId::pow()));
  CHECK(has_call(c, OpId::mul()));
  Rng rng(51);
  for (int i = 0; i < 10; ++i) {
    const double v = uniform(rng, -3, 3);
    CHECK(close(exec_bytecode(c, std::vector<double>{v})[0], evaluate(cube, {{"x", v}}), 1e-12));
  }
  // Composite bases are computed once.
  const Bytecode p8 = lower_to_bytecode(build_function({pow(x + y, Term(8))}, {x, y}));
  CHECK_FALSE(has_call(p8, OpId::pow()));
  CHECK(p8.n_locals == 1);
  CHECK(close(exec_bytecode(p8, std::vector<double>{0.5, 0.75})[0], std::pow(1.25, 8), 1e-12));
  CHECK(has_call(lower_to_bytecode(build_function({pow(x, Term(9))}, {x})), OpId::pow()));
  CHECK(verify_bytecode(p8).empty());
}

TEST_CASE("uninterpreted functions need a runtime binding") {
  const OpId g = OpId::declare("gfun", 2);
  const FuncDef f = build_function({make_app(g, {x, y}) + 1}, {x, y});
  CHECK_THROWS_WITH_AS(lower_to_bytecode(f), doctest::Contains("gfun"), Error);
  RuntimeBindings rt;
  rt["gfun"] = [](std::span<const double> a) { return a[0] * 10 + a[1]; };
  const Bytecode bc = lower_to_bytecode(f, rt);
  CHECK(exec_bytecode(bc, std::vector<double>{2, 3})[0] == 24.0);
}

TEST_CASE("exec_bytecode") {
  CHECK(run({x + y}, {x, y}, {1, 2}) == std::vector<double>{3.0});
  CHECK(run({symx::sin(x)}, {x}, {0}) == std::vector<double>{0.0});
  CHECK(run({x * x / 6}, {x}, {3})[0] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(run({x * y, y}, {x, y}, {2, 5}) == std::vector<double>{10.0, 5.0});
  const Bytecode bc = lower_to_bytecode(build_function({x + y}, {x, y}));
  CHECK_THROWS_AS(exec_bytecode(bc, std::vector<double>{1}), Error);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(std::isnan(run({x - y}, {x, y}, {inf, inf})[0]));
  CHECK(std::isinf(run({1 / x}, {x}, {0.0})[0]));
}

TEST_CASE("let blocks and arrays") {
  const Term t = make_symbol("t");
  FuncDef f;
  f.name = "f";
  f.params = {x};
  f.body = ir(LetBlock{{Assignment{"t", IRExpr{x * x}}}, ir(MakeArray{{IRExpr{t + 1}, IRExpr{t * x}}})});
  CHECK_NOTHROW(check_function(f));
  const Bytecode bc = lower_to_bytecode(f);
  CHECK(verify_bytecode(bc).empty());
  CHECK(bc.n_outputs == 2);
  CHECK(exec_bytecode(bc, std::vector<double>{3}) == std::vector<double>{10.0, 27.0});
  const std::string c = render_source(f, Dialect::PseudoC);
  CHECK(c.rfind("void f(double x, double* out) {", 0) == 0);
  CHECK(c.find("double t = pow(x, 2);") != std::string::npos);
  CHECK(c.find("out[1] = t * x;") != std::string::npos);
  CHECK(render_source(f, Dialect::Sexpr) == "(defun f (x) (let ((t (^ x 2))) (array (+ 1 t) (* t x))))");

  FuncDef bad = f;
  bad.body = ir(IRExpr{t + x});
  CHECK_THROWS_WITH_AS(check_function(bad), doctest::Contains("t"), Error);
}

TEST_CASE("verify_bytecode rejects malformed code") {
  Bytecode bc = lower_to_bytecode(build_function({x + y}, {x, y}));
  CHECK(verify_bytecode(bc).empty());
  Bytecode underflow = bc;
  underflow.code.erase(underflow.code.begin());
  CHECK_FALSE(verify_bytecode(underflow).empty());
  CHECK_FALSE(bytecode_problem(underflow).empty());
  Bytecode extra = bc;
  extra.code.push_back(Instr{OpCode::PushConst, 0, 1.0, {}});
  CHECK_FALSE(verify_bytecode(extra).empty());
  CHECK_FALSE(bytecode_problem(extra).empty());
  Bytecode unstored = bc;
  unstored.n_locals = 1;
  unstored.local_names = {"t"};
  unstored.code.insert(unstored.code.begin(), Instr{OpCode::LoadLocal, 0, 0, {}});
  unstored.code.push_back(Instr{OpCode::Call, 2, 0, OpId::add()});
  CHECK_FALSE(verify_bytecode(unstored).empty());
  CHECK_FALSE(bytecode_problem(unstored).empty());
  Bytecode range = bc;
  range.code[1].n = 7;
  CHECK_FALSE(verify_bytecode(range).empty());
}

TEST_CASE("render_source") {
  CHECK(render_source(build_function({x + y}, {x, y}), Dialect::Sexpr) == "(defun f (x y) (+ x y))");
  CHECK(render_source(build_function({x}, {x}), Dialect::PseudoC) == "double f(double x) { return x; }");
  const std::string p = render_source(build_function({pow(x + y, Term(2)) / 3}, {x, y}), Dialect::PseudoC);
  CHECK(p.find("pow(") != std::string::npos);
  CHECK(render_sexpr(symx::sin(2 * x)) == "(sin (* 2 x))");
  CHECK(render_sexpr(Term(Constant::rational(1, 3)) * x) == "(* (/ 1 3) x)");
  const std::string arr = render_source(build_function({x * y, y}, {x, y}, "jac"), Dialect::PseudoC);
  CHECK(arr.rfind("void jac(double x, double y, double* out)", 0) == 0);
  CHECK(arr.find("out[0] = x * y;") != std::string::npos);
}

TEST_CASE("sexpr parsing") {
  const FuncDef f = parse_sexpr_function("(defun g (x y) (+ (* 2 x) (^ y 2)))");
  CHECK(f.name == "g");
  CHECK(f.params == std::vector<Term>{x, y});
  CHECK(canonicalize(std::get<IRExpr>(f.body->value).term) == 2 * x + pow(y, Term(2)));
  CHECK(canonicalize(parse_sexpr("(/ 1 3)")) == Term(Constant::rational(1, 3)));
  CHECK_THROWS_AS(parse_sexpr("(+ x"), Error);
  CHECK_THROWS_AS(parse_sexpr_function("(lambda (x) x)"), Error);
}

TEST_CASE("sexpr round trip") {
  const auto r = prop_sexpr(52, 1000);
  INFO(r.summary());
  CHECK(r.cases == 1000);
  CHECK(r.ok());
  const FuncDef two = build_function({x * y, symx::exp(x) - y}, {x, y});
  const FuncDef back = parse_sexpr_function(render_source(two, Dialect::Sexpr));
  const auto& elems = std::get<MakeArray>(back.body->value).elements;
  REQUIRE(elems.size() == 2);
  CHECK(canonicalize(elems[1].term) == symx::exp(x) - y);
}

TEST_CASE("map_reduce_eval") {
  const Term p = make_symbol("p");
  const MapReduce id = sum_of(p, p, {});
  CHECK(map_reduce_eval(id, std::vector<double>{1, 2, 3}) == 6.0);
  const MapReduce sq = sum_of(p * p, p, {});
  CHECK(map_reduce_eval(sq, std::vector<double>{1, 2, 3}) == 14.0);
  CHECK(map_reduce_eval(id, std::vector<double>{}) == 0.0);
  CHECK(map_reduce_eval(sum_of(p, p, {}, OpId::of(Prim::Max), Constant(-100)), std::vector<double>{3, -1, 7}) == 7.0);
  CHECK(map_reduce_eval(sum_of(p, p, {}, OpId::mul(), Constant(1)), std::vector<double>{2, 3, 4}) == 24.0);
  CHECK_THROWS_AS(map_reduce_eval(sum_of(p, p, {}, OpId::sub()), std::vector<double>{1}), Error);

  Rng rng(53);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> in(1 + pick(rng, 1000));
    for (double& v : in) v = uniform(rng, -2, 2);
    const MapReduce m = sum_of(p * p + symx::sin(p), p, {});
    CHECK(close(map_reduce_eval(m, in, FoldOrder::Left), map_reduce_eval(m, in, FoldOrder::Tree), 1e-9));
    for (double& v : in) v = uniform(rng, 0.99, 1.01);
    const MapReduce prod = sum_of(p, p, {}, OpId::mul(), Constant(1));
    CHECK(close(map_reduce_eval(prod, in, FoldOrder::Left), map_reduce_eval(prod, in, FoldOrder::Tree), 1e-9));
  }
}

TEST_CASE("map-reduce inside a function") {
  const Term p = make_symbol("p");
  FuncDef f;
  f.name = "f";
  f.params = {x, y};
  f.body = ir(sum_of(p * p, p, {x, y, x + y}));
  const Bytecode bc = lower_to_bytecode(f);
  CHECK(verify_bytecode(bc).empty());
  CHECK(exec_bytecode(bc, std::vector<double>{1, 2}) == std::vector<double>{14.0});
  CHECK(render_source(f, Dialect::Sexpr) == "(defun f (x y) (mapreduce (lambda (p) (^ p 2)) + 0 (array x y (+ x y))))");
  const std::string c = render_source(f, Dialect::PseudoC);
  CHECK(c.find("acc") != std::string::npos);
}

TEST_CASE("every produced bytecode passes the stack checker") {
  const auto r = prop_bytecode(54, 1000);
  INFO(r.summary());
  CHECK(r.cases == 1000);
  CHECK(r.ok());
}

TEST_CASE("bytecode agrees with the interpreter") {
  const auto r = prop_vm_interpreter(55, 1000);
  INFO(r.summary());
  CHECK(r.cases == 1000);
  CHECK(r.ok());
}

TEST_CASE("optimized code computes the same values") {
  TermGen g(56, symbol_pool(4), GenOptions{6, true, true, true});
  NaiveEval guard;
  const CostModel cm = CostModel::defaults();
  std::size_t checked = 0;
  for (int i = 0; i < 200; ++i) {
    const Term t = g.canonical(6);
    const Optimization o = optimize(t, cycle_rules(), cm, SaturationLimits{6, 3000, 1e9});
    const Bytecode before = lower_to_bytecode(build_function({t}, g.symbols()));
    const Bytecode after = lower_to_bytecode(build_function({o.term}, g.symbols()));
    for (int k = 0; k < 5; ++k) {
      const Values env = g.env();
      if (!guard(t, env) || !guard(o.tree, env)) continue;
      std::vector<double> args;
      for (const Term& s : g.symbols()) args.push_back(env.at(s.name()));
      ++checked;
      INFO(print_expr(t) << " -> " << print_expr(o.term));
      CHECK(close(exec_bytecode(before, args)[0], exec_bytecode(after, args)[0], 1e-9, 1e-12));
    }
  }
  CHECK(checked > 800);
}

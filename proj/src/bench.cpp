#include "symx/bench.hpp"

#include "symx/error.hpp"
#include "symx/rewrite.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <unordered_map>

namespace symx {

RandomChain random_chain(std::size_t terms, std::uint64_t seed) {
  if (terms == 0) throw Error("bench needs at least one term");
  std::mt19937_64 rng(seed);
  std::vector<Term> symbols;
  for (int i = 0; i < 10; ++i) symbols.push_back(make_symbol("x" + std::to_string(i)));
  auto leaf = [&]() -> Term {
    const auto r = rng() % 10;
    if (r < 8) return symbols[rng() % symbols.size()];
    return Term(static_cast<long>(1 + rng() % 9));
  };
  RandomChain c;
  c.leaves.push_back(leaf());
  for (std::size_t i = 1; i < terms; ++i) {
    c.ops.push_back(i % 2 ? Prim::Add : Prim::Mul);
    c.leaves.push_back(leaf());
  }
  return c;
}

Term construct_canonical(const RandomChain& chain) {
  Term acc = chain.leaves[0];
  for (std::size_t i = 0; i < chain.ops.size(); ++i) {
    const Term pair[] = {acc, chain.leaves[i + 1]};
    acc = chain.ops[i] == Prim::Add ? add_terms(pair) : mul_terms(pair);
  }
  return acc;
}

Term construct_raw(const RandomChain& chain) {
  Term acc = chain.leaves[0];
  for (std::size_t i = 0; i < chain.ops.size(); ++i) {
    acc = make_app(chain.ops[i] == Prim::Add ? OpId::add() : OpId::mul(), {acc, chain.leaves[i + 1]});
  }
  return acc;
}

namespace {

bool raw_op(const Term& t, Prim p) { return t.is_app() && t.op().prim() == p; }

bool sum_or_product(const Term& t) { return raw_op(t, Prim::Add) || raw_op(t, Prim::Mul); }

Term rebuild(const Term& like, std::vector<Term> args) {
  if (args.size() == 1) return args[0];
  return make_app(like.op(), std::move(args));
}

Term flatten(const Term& t) {
  if (!sum_or_product(t)) return t;
  const Prim p = t.op().prim();
  const auto args = t.args();
  if (std::none_of(args.begin(), args.end(), [&](const Term& a) { return raw_op(a, p); })) return t;
  std::vector<Term> out;
  for (const Term& a : args) {
    if (raw_op(a, p)) {
      out.insert(out.end(), a.args().begin(), a.args().end());
    } else {
      out.push_back(a);
    }
  }
  return rebuild(t, std::move(out));
}

Term fold_constants(const Term& t) {
  if (!sum_or_product(t)) return t;
  const bool sum = t.op().prim() == Prim::Add;
  const Constant unit = sum ? Constant(0) : Constant(1);
  Constant acc = unit;
  std::size_t count = 0;
  std::vector<Term> rest;
  for (const Term& a : t.args()) {
    if (a.is_constant()) {
      acc = sum ? acc + a.value() : acc * a.value();
      ++count;
    } else {
      rest.push_back(a);
    }
  }
  if (!sum && count > 0 && acc.is_zero()) return Term(acc);
  const bool keep = !(acc == unit) || rest.empty();
  if (count == 0 || (count == 1 && keep && t.args()[0].is_constant())) return t;
  std::vector<Term> out;
  if (keep) out.push_back(Term(acc));
  out.insert(out.end(), rest.begin(), rest.end());
  return rebuild(t, std::move(out));
}

// term = coefficient * rest
std::pair<Constant, Term> split_coefficient(const Term& t) {
  if (!raw_op(t, Prim::Mul)) return {Constant(1), t};
  const auto args = t.args();
  auto it = std::find_if(args.begin(), args.end(), [](const Term& a) { return a.is_constant(); });
  if (it == args.end()) return {Constant(1), t};
  std::vector<Term> rest;
  for (auto j = args.begin(); j != args.end(); ++j) {
    if (j != it) rest.push_back(*j);
  }
  return {it->value(), rebuild(t, std::move(rest))};
}

// term = base ^ exponent
std::pair<Term, Constant> split_exponent(const Term& t) {
  if (raw_op(t, Prim::Pow) && t.args()[1].is_constant()) return {t.args()[0], t.args()[1].value()};
  return {t, Constant(1)};
}

template <class Split, class Join>
Term collect(const Term& t, Split split, Join join) {
  std::vector<std::pair<Term, Constant>> groups;
  std::unordered_map<Term, std::size_t, TermHash> index;
  bool merged = false;
  for (const Term& a : t.args()) {
    if (a.is_constant()) {
      groups.emplace_back(a, Constant(1));
      continue;
    }
    auto [key, weight] = split(a);
    auto [it, fresh] = index.emplace(key, groups.size());
    if (fresh) {
      groups.emplace_back(key, weight);
    } else {
      groups[it->second].second = groups[it->second].second + weight;
      merged = true;
    }
  }
  if (!merged) return t;
  std::vector<Term> out;
  for (const auto& [key, weight] : groups) {
    if (key.is_constant()) {
      out.push_back(key);
    } else if (!weight.is_zero()) {
      out.push_back(join(key, weight));
    }
  }
  if (out.empty()) return Term(t.op().prim() == Prim::Add ? 0 : 1);
  return rebuild(t, std::move(out));
}

Term collect_like_terms(const Term& t) {
  if (raw_op(t, Prim::Add)) {
    return collect(
        t, [](const Term& a) { auto [c, r] = split_coefficient(a); return std::pair{r, c}; },
        [](const Term& r, const Constant& c) { return c.is_one() ? r : make_app(OpId::mul(), {Term(c), r}); });
  }
  if (raw_op(t, Prim::Mul)) {
    return collect(t, split_exponent,
                   [](const Term& b, const Constant& e) { return e.is_one() ? b : make_app(OpId::pow(), {b, Term(e)}); });
  }
  return t;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

// Binary rules applied to every pair of arguments of an n-ary + or * node.
std::string_view like_term_rule_text() {
  return R"(# Like-term collection over argument pairs.
add-same:       ~x + ~x => 2*~x
add-scaled:     ~a*~x + ~x => (~a + 1)*~x where ~a::Constant
add-scaled2:    ~a*~x + ~b*~x => (~a + ~b)*~x where ~a::Constant, ~b::Constant
mul-same:       ~x * ~x => ~x^2
mul-power:      ~x^~a * ~x => ~x^(~a + 1) where ~a::Constant
mul-power2:     ~x^~a * ~x^~b => ~x^(~a + ~b) where ~a::Constant, ~b::Constant
)";
}

std::string_view constant_rule_text() {
  return R"(# Constant folding over argument pairs.
fold-add:       ~a + ~b => ~a + ~b where ~a::Constant, ~b::Constant
fold-mul:       ~a * ~b => ~a * ~b where ~a::Constant, ~b::Constant
add-zero:       ~x + 0 => ~x
mul-one:        ~x * 1 => ~x
mul-zero:       ~x * 0 => 0
)";
}

namespace {

// Raw instantiation; a node whose arguments are all constants is folded.
Term instantiate_raw(const Pattern& p, const Bindings& b) {
  switch (p.kind) {
    case Pattern::Kind::Slot: return b.at(p.slot);
    case Pattern::Kind::Literal: return p.literal;
    case Pattern::Kind::Node: break;
  }
  std::vector<Term> args;
  bool constant = true;
  for (const Pattern& a : p.args) {
    args.push_back(instantiate_raw(a, b));
    constant = constant && args.back().is_constant();
  }
  if (constant) return build(p.op, args);
  return make_app(p.op, std::move(args));
}

std::optional<Term> rewrite_pair(const std::vector<Rule>& rules, const Term& t) {
  const auto args = t.args();
  for (const Rule& r : rules) {
    if (r.lhs.kind != Pattern::Kind::Node || !(r.lhs.op == t.op()) || r.lhs.args.size() != 2) continue;
    for (std::size_t i = 0; i < args.size(); ++i) {
      for (std::size_t j = i + 1; j < args.size(); ++j) {
        const Term pair = args.size() == 2 ? t : make_app(t.op(), {args[i], args[j]});
        auto b = match(r.lhs, pair);
        if (!b) continue;
        std::vector<Term> out;
        out.reserve(args.size() - 1);
        for (std::size_t k = 0; k < args.size(); ++k) {
          if (k == i) {
            out.push_back(instantiate_raw(r.rhs, *b));
          } else if (k != j) {
            out.push_back(args[k]);
          }
        }
        return rebuild(t, std::move(out));
      }
    }
  }
  return std::nullopt;
}

}  // namespace

Rewriter ac_pair_rules(std::string name, std::vector<Rule> rules) {
  auto shared = std::make_shared<const std::vector<Rule>>(std::move(rules));
  return Rewriter::function(std::move(name), [shared](const Term& t) {
    Term cur = t;
    while (sum_or_product(cur)) {
      auto next = rewrite_pair(*shared, cur);
      if (!next) break;
      cur = *next;
    }
    return cur;
  });
}

Rewriter rule_based_simplifier(std::size_t max_iters) {
  return Rewriter::fixpoint(
      Rewriter::postwalk(Rewriter::chain({
          Rewriter::function("flatten", flatten),
          ac_pair_rules("collect-like-terms", load_rules(like_term_rule_text(), PatternStyle::Binary)),
          ac_pair_rules("fold-constants", load_rules(constant_rule_text(), PatternStyle::Binary)),
      })),
      max_iters);
}

Rewriter hand_coded_simplifier(std::size_t max_iters) {
  return Rewriter::fixpoint(Rewriter::postwalk(Rewriter::chain({
                                Rewriter::function("flatten", flatten),
                                Rewriter::function("collect-like-terms", collect_like_terms),
                                Rewriter::function("fold-constants", fold_constants),
                            })),
                            max_iters);
}

BenchResult bench_construct(std::size_t terms, std::uint64_t seed, std::size_t warmup, std::size_t runs) {
  if (runs == 0) throw Error("bench needs at least one measured run");
  const RandomChain chain = random_chain(terms, seed);
  const Rewriter simplifier = rule_based_simplifier();
  const Rewriter hand_coded = hand_coded_simplifier();
  BenchResult r;
  for (std::size_t i = 0; i < warmup + runs; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    Term c = construct_canonical(chain);
    const double canonical = elapsed_ms(t0);
    t0 = std::chrono::steady_clock::now();
    Term b = simplifier(construct_raw(chain));
    const double baseline = elapsed_ms(t0);
    t0 = std::chrono::steady_clock::now();
    Term h = hand_coded(construct_raw(chain));
    const double direct = elapsed_ms(t0);
    if (i >= warmup) {
      r.canonical_ms.push_back(canonical);
      r.baseline_ms.push_back(baseline);
      r.hand_coded_ms.push_back(direct);
    }
    r.hand_coded = h;
    r.canonical = c;
    r.baseline = b;
  }
  r.canonical_median_ms = median(r.canonical_ms);
  r.baseline_median_ms = median(r.baseline_ms);
  r.hand_coded_median_ms = median(r.hand_coded_ms);
  r.ratio = r.canonical_median_ms > 0 ? r.baseline_median_ms / r.canonical_median_ms : 0;
  r.hand_coded_ratio = r.canonical_median_ms > 0 ? r.hand_coded_median_ms / r.canonical_median_ms : 0;
  return r;
}

}  // namespace symx

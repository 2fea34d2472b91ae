#pragma once

// Random term generation and independent numeric oracles shared by the tests.

#include "symx/term.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace symx::testing {

using Rng = std::mt19937_64;
using Values = std::unordered_map<std::string, double>;

inline bool close(double a, double b, double rel, double abs_floor = 0.0) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::fabs(a - b) <= rel * std::max(std::fabs(a), std::fabs(b)) + abs_floor;
}

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline std::size_t pick(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

inline std::vector<Term> symbol_pool(std::size_t n) {
  static const char* names[] = {"a", "b", "c", "x", "y", "z", "u", "v"};
  std::vector<Term> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(make_symbol(names[i]));
  return out;
}

struct GenOptions {
  std::size_t max_depth = 5;
  bool functions = true;  // sin cos exp log sqrt tan
  bool division = true;
  bool rationals = true;
};

/// Raw (unsimplified) App trees over the symbol pool.
class TermGen {
 public:
  TermGen(std::uint64_t seed, std::vector<Term> symbols, GenOptions options = {})
      : rng_(seed), symbols_(std::move(symbols)), options_(options) {}

  Rng& rng() { return rng_; }
  const std::vector<Term>& symbols() const { return symbols_; }

  Term leaf() {
    const auto r = pick(rng_, 10);
    if (r < 6) return symbols_[pick(rng_, symbols_.size())];
    if (r < 9 || !options_.rationals) return Term(static_cast<long>(pick(rng_, 7)) - 2);
    return Term(Constant::rational(static_cast<long>(1 + pick(rng_, 5)), static_cast<long>(2 + pick(rng_, 4))));
  }

  Term raw(std::size_t depth) {
    if (depth <= 1 || pick(rng_, 4) == 0) return leaf();
    const auto r = pick(rng_, options_.functions ? 12 : 8);
    auto sub = [&] { return raw(depth - 1); };
    switch (r) {
      case 0:
      case 1: return make_app(OpId::add(), {sub(), sub()});
      case 2:
      case 3: return make_app(OpId::mul(), {sub(), sub()});
      case 4: return make_app(OpId::sub(), {sub(), sub()});
      case 5:
        if (options_.division) return make_app(OpId::div(), {sub(), sub()});
        return make_app(OpId::sub(), {sub()});
      case 6: return make_app(OpId::pow(), {sub(), Term(static_cast<long>(pick(rng_, 5)) - 1)});
      case 7: return make_app(OpId::add(), {sub(), sub(), sub()});
      case 8: return make_app(OpId::of(Prim::Sin), {sub()});
      case 9: return make_app(OpId::of(Prim::Cos), {sub()});
      case 10: return make_app(OpId::of(Prim::Exp), {make_app(OpId::mul(), {Term(Constant::rational(1, 4)), sub()})});
      default: return make_app(OpId::of(Prim::Sqrt), {make_app(OpId::add(), {Term(2), make_app(OpId::pow(), {sub(), Term(2)})})});
    }
  }

  /// Canonical term, retried until construction succeeds (e.g. no exact 0^-1).
  Term canonical(std::size_t depth) {
    for (;;) {
      try {
        return canonicalize(raw(depth));
      } catch (const std::exception&) {
      }
    }
  }

  Values env(double lo = -2.0, double hi = 2.0) {
    Values v;
    for (const Term& s : symbols_) {
      double x = uniform(rng_, lo, hi);
      if (std::fabs(x) < 0.1) x += x < 0 ? -0.3 : 0.3;
      v[s.name()] = x;
    }
    return v;
  }

 private:
  Rng rng_;
  std::vector<Term> symbols_;
  GenOptions options_;
};

/// Evaluator over raw trees (constants, symbols, App nodes) written without the
/// library's evaluator. Returns nullopt near singularities: |divisor| or the base
/// of a negative power below `guard`, or any non-finite intermediate.
class NaiveEval {
 public:
  explicit NaiveEval(double guard = 1e-3) : guard_(guard) {}

  std::optional<double> operator()(const Term& t, const Values& env) const {
    bool ok = true;
    const double v = eval(t, env, ok);
    if (!ok || !std::isfinite(v)) return std::nullopt;
    return v;
  }

 private:
  double eval(const Term& t, const Values& env, bool& ok) const {
    if (!ok) return 0;
    switch (t.kind()) {
      case Term::Kind::Constant: return t.value().to_double();
      case Term::Kind::Symbol: return env.at(t.name());
      case Term::Kind::App: break;
      default: {
        // Canonical nodes: walk the generic interface.
        const auto& args = arguments(t);
        const OpId op = operation(t);
        return apply(op.prim(), args, env, ok);
      }
    }
    const auto args = t.args();
    return apply(t.op().prim(), std::vector<Term>(args.begin(), args.end()), env, ok);
  }

  double apply(Prim p, const std::vector<Term>& args, const Values& env, bool& ok) const {
    std::vector<double> v;
    for (const Term& a : args) v.push_back(eval(a, env, ok));
    if (!ok) return 0;
    auto check = [&](double x) {
      if (!std::isfinite(x)) ok = false;
      return x;
    };
    switch (p) {
      case Prim::Add: {
        double s = 0;
        for (double x : v) s += x;
        return check(s);
      }
      case Prim::Mul: {
        double s = 1;
        for (double x : v) s *= x;
        return check(s);
      }
      case Prim::Sub: return check(v.size() == 1 ? -v[0] : v[0] - v[1]);
      case Prim::Div:
        if (std::fabs(v[1]) < guard_) ok = false;
        return ok ? check(v[0] / v[1]) : 0;
      case Prim::Pow:
        if (v[1] < 0 && std::fabs(v[0]) < guard_) ok = false;
        if (v[0] < 0 && std::floor(v[1]) != v[1]) ok = false;
        return ok ? check(std::pow(v[0], v[1])) : 0;
      case Prim::Sin: return check(std::sin(v[0]));
      case Prim::Cos: return check(std::cos(v[0]));
      case Prim::Tan: return check(std::tan(v[0]));
      case Prim::Exp: return check(std::exp(v[0]));
      case Prim::Log:
        if (v[0] < guard_) ok = false;
        return ok ? check(std::log(v[0])) : 0;
      case Prim::Sqrt:
        if (v[0] < 0) ok = false;
        return ok ? check(std::sqrt(v[0])) : 0;
      case Prim::Abs: return std::fabs(v[0]);
      case Prim::Min: return *std::min_element(v.begin(), v.end());
      case Prim::Max: return *std::max_element(v.begin(), v.end());
      case Prim::User: ok = false; return 0;
    }
    return 0;
  }

  double guard_;
};

}  // namespace symx::testing

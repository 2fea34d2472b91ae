#include "symx/cost.hpp"

#include "symx/error.hpp"

#include <cmath>
#include <sstream>

namespace symx {

CostModel CostModel::defaults() {
  CostModel cm;
  cm.leaf_cost = 1;
  cm.weights = {{"+", 1},   {"-", 1},    {"*", 3},   {"/", 30},  {"^", 60},   {"sin", 100}, {"cos", 100},
                {"tan", 100}, {"exp", 100}, {"log", 100}, {"sqrt", 20}, {"abs", 1}, {"min", 2},   {"max", 2}};
  return cm;
}

CostModel CostModel::parse(std::string_view text) {
  CostModel cm = defaults();
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) throw ParseError("expected key=value", line_no, 1);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    double w = 0;
    try {
      std::size_t used = 0;
      w = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw ParseError("invalid weight '" + value + "'", line_no, eq + 2);
    }
    if (!std::isfinite(w) || w < 0) throw ParseError("weights must be finite and nonnegative", line_no, eq + 2);
    if (key == "leaf") {
      cm.leaf_cost = w;
    } else {
      cm.weights[key] = w;
    }
  }
  return cm;
}

double CostModel::weight(std::string_view name) const {
  auto it = weights.find(name);
  if (it == weights.end()) throw Error("cost model has no weight for '" + std::string(name) + "'");
  return it->second;
}

double CostModel::weight(const OpId& op) const { return weight(op.name()); }

namespace {

Term raw(OpId op, std::vector<Term> args) { return make_app(op, std::move(args)); }

Term fold(OpId op, std::vector<Term> items) {
  Term acc = items[0];
  for (std::size_t i = 1; i < items.size(); ++i) acc = raw(op, {acc, items[i]});
  return acc;
}

bool negative_term(const Term& t) {
  if (t.is_constant()) return t.value().is_negative();
  if (t.is_mul()) return t.coeff().is_negative();
  return false;
}

Term negated(const Term& t) {
  const Term parts[] = {Term(-1), t};
  return mul_terms(parts);
}

Term factor(const Term& b, const Constant& e) {
  if (e.is_exact() && e.is_one()) return b;
  return pow_terms(b, Term(e));
}

Term lower_mul(const Term& t) {
  std::vector<Term> num;
  std::vector<Term> den;
  const Constant c = t.coeff();
  const Constant mag = c.abs();
  const bool negative = c.is_negative();
  const bool unit = mag.is_exact() && mag.is_one();
  // A coefficient of -1 becomes a unary minus; other coefficients are one signed leaf.
  if (!unit) num.push_back(Term(negative ? c : mag));
  for (const auto& [b, e] : t.entries()) {
    if (e.is_negative()) {
      den.push_back(lower_binary(factor(b, -e)));
    } else {
      num.push_back(lower_binary(factor(b, e)));
    }
  }
  Term out = num.empty() ? Term(1) : fold(OpId::mul(), num);
  if (!den.empty()) out = raw(OpId::div(), {out, fold(OpId::mul(), den)});
  if (negative && unit) out = raw(OpId::sub(), {out});
  return out;
}

}  // namespace

Term lower_binary(const Term& t) {
  switch (t.kind()) {
    case Term::Kind::Constant:
    case Term::Kind::Symbol: return t;
    case Term::Kind::Add: {
      const std::vector<Term>& args = arguments(t);
      Term acc = lower_binary(args[0]);
      for (std::size_t i = 1; i < args.size(); ++i) {
        if (negative_term(args[i])) {
          acc = raw(OpId::sub(), {acc, lower_binary(negated(args[i]))});
        } else {
          acc = raw(OpId::add(), {acc, lower_binary(args[i])});
        }
      }
      return acc;
    }
    case Term::Kind::Mul: return lower_mul(t);
    case Term::Kind::Pow: {
      const Term& e = t.exponent();
      if (e.is_constant() && e.value().is_negative()) {
        return raw(OpId::div(), {Term(1), lower_binary(factor(t.base(), -e.value()))});
      }
      return raw(OpId::pow(), {lower_binary(t.base()), lower_binary(e)});
    }
    case Term::Kind::App: {
      std::vector<Term> args;
      for (const Term& a : t.args()) args.push_back(lower_binary(a));
      const Prim p = t.op().prim();
      if ((p == Prim::Add || p == Prim::Mul) && args.size() != 2) {
        if (args.size() == 1) return args[0];
        return fold(t.op(), std::move(args));
      }
      bool same = true;
      for (std::size_t i = 0; i < args.size(); ++i) same = same && args[i].same_node(t.args()[i]);
      return same ? t : make_app(t.op(), std::move(args));
    }
  }
  return t;
}

double tree_cost(const Term& tree, const CostModel& cm) {
  if (!tree.is_app()) {
    if (is_tree(tree)) return tree_cost(lower_binary(tree), cm);
    return cm.leaf_cost;
  }
  double c = cm.weight(tree.op());
  for (const Term& a : tree.args()) c += tree_cost(a, cm);
  return c;
}

double cycle_cost(const Term& t, const CostModel& cm) { return tree_cost(lower_binary(t), cm); }

}  // namespace symx

#include "symx/term.hpp"

#include "symx/error.hpp"
#include "symx/hash.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

namespace symx {

using detail::TermNode;
using Kind = Term::Kind;

namespace {

SymType at_least(const SymType& t, SymType::Kind k) {
  return static_cast<int>(t.kind()) >= static_cast<int>(k) ? t : SymType(k);
}

void require_numeric(const Term& t, const char* what) {
  if (!t.symtype().is_numeric()) {
    throw TypeError(std::string(what) + " is not defined on symtype " + t.symtype().str());
  }
}

SymType pow_type(const SymType& base, const Constant& e) {
  SymType t = join(base, e.symtype());
  if (e.is_exact_integer()) return e.is_negative() ? at_least(t, SymType::Kind::Rational) : t;
  return at_least(t, SymType::Kind::Real);
}

SymType pow_type(const SymType& base, const Term& exponent) {
  if (exponent.is_constant()) return pow_type(base, exponent.value());
  SymType t = join(base, exponent.symtype());
  return at_least(t, exponent.symtype().is_subtype_of(SymType::Kind::Integer) ? SymType::Kind::Rational
                                                                               : SymType::Kind::Real);
}

// Structural decisions (collapse, omission) use exact identities only, keeping
// canonicalization idempotent when inexact 1.0 or 0.0 coefficients appear.
bool exact_one(const Constant& c) { return c.is_exact() && c.is_one(); }
bool exact_zero(const Constant& c) { return c.is_exact() && c.is_zero(); }

std::uint64_t prim_salt(Kind k) { return mix64(static_cast<std::uint64_t>(k) + 0x1234567ULL); }

}  // namespace

// Owns node construction; the only place that fills TermNode fields.
struct TermFactory {
  static Term constant(const Constant& c) {
    auto n = std::make_shared<TermNode>();
    n->kind = Kind::Constant;
    n->type = c.symtype();
    n->constant = c;
    n->hash = hash_combine(prim_salt(Kind::Constant), c.hash());
    return Term(std::move(n));
  }

  static Term symbol(std::string name, SymType type) {
    auto n = std::make_shared<TermNode>();
    n->kind = Kind::Symbol;
    n->hash = hash_combine(hash_combine(prim_salt(Kind::Symbol), hash_string(name)), hash_string(type.str()));
    n->name = std::move(name);
    n->type = std::move(type);
    return Term(std::move(n));
  }

  // Entries must already be sorted by key and free of zeros.
  static Term sum_or_product(Kind kind, Constant coeff, std::vector<Entry> entries, SymType type) {
    auto n = std::make_shared<TermNode>();
    n->kind = kind;
    std::uint64_t h = hash_combine(prim_salt(kind), coeff.hash());
    for (const auto& [t, c] : entries) h = hash_combine(hash_combine(h, t.hash()), c.hash());
    n->hash = h;
    n->constant = std::move(coeff);
    n->entries = std::move(entries);
    n->type = std::move(type);
    return Term(std::move(n));
  }

  static Term power(const Term& base, const Term& exponent) {
    auto n = std::make_shared<TermNode>();
    n->kind = Kind::Pow;
    n->type = pow_type(base.symtype(), exponent);
    n->hash = hash_combine(hash_combine(prim_salt(Kind::Pow), base.hash()), exponent.hash());
    n->args = {base, exponent};
    return Term(std::move(n));
  }

  static Term app(OpId op, std::vector<Term> args, SymType type) {
    auto n = std::make_shared<TermNode>();
    n->kind = Kind::App;
    std::uint64_t h = hash_combine(hash_combine(prim_salt(Kind::App), hash_string(op.name())), hash_string(type.str()));
    for (const Term& a : args) h = hash_combine(h, a.hash());
    n->hash = h;
    n->op = op;
    n->args = std::move(args);
    n->type = std::move(type);
    return Term(std::move(n));
  }

  static const TermNode& node(const Term& t) { return *t.node_; }
};

// ---- Term accessors ---------------------------------------------------------------

Term::Term() : Term(TermFactory::constant(Constant(0))) {}
Term::Term(const Constant& c) : Term(TermFactory::constant(c)) {}

Kind Term::kind() const { return node_->kind; }
const SymType& Term::symtype() const { return node_->type; }
std::size_t Term::hash() const { return node_->hash; }

bool Term::is_raw_arithmetic() const { return node_->kind == Kind::App && node_->op.is_arithmetic(); }

const Constant& Term::value() const {
  if (node_->kind != Kind::Constant) throw ContractError("value() on a non-constant term");
  return node_->constant;
}
const std::string& Term::name() const {
  if (node_->kind != Kind::Symbol) throw ContractError("name() on a non-symbol term");
  return node_->name;
}
const Constant& Term::coeff() const {
  if (node_->kind != Kind::Add && node_->kind != Kind::Mul) throw ContractError("coeff() requires Add or Mul");
  return node_->constant;
}
std::span<const Entry> Term::entries() const {
  if (node_->kind != Kind::Add && node_->kind != Kind::Mul) throw ContractError("entries() requires Add or Mul");
  return node_->entries;
}
const Term& Term::base() const {
  if (node_->kind != Kind::Pow) throw ContractError("base() requires Pow");
  return node_->args[0];
}
const Term& Term::exponent() const {
  if (node_->kind != Kind::Pow) throw ContractError("exponent() requires Pow");
  return node_->args[1];
}
OpId Term::op() const {
  if (node_->kind != Kind::App) throw ContractError("op() requires App");
  return node_->op;
}
std::span<const Term> Term::args() const {
  if (node_->kind != Kind::App) throw ContractError("args() requires App");
  return node_->args;
}

bool operator==(const Term& a, const Term& b) {
  if (a.node_ == b.node_) return true;
  const TermNode& x = *a.node_;
  const TermNode& y = *b.node_;
  if (x.kind != y.kind || x.hash != y.hash || !(x.type == y.type)) return false;
  switch (x.kind) {
    case Kind::Constant: return x.constant == y.constant;
    case Kind::Symbol: return x.name == y.name;
    case Kind::Add:
    case Kind::Mul:
      return x.constant == y.constant && x.entries.size() == y.entries.size() &&
             std::equal(x.entries.begin(), x.entries.end(), y.entries.begin(),
                        [](const Entry& p, const Entry& q) { return p.second == q.second && p.first == q.first; });
    case Kind::Pow: return x.args[0] == y.args[0] && x.args[1] == y.args[1];
    case Kind::App: return x.op == y.op && x.args == y.args;
  }
  return false;
}

namespace {

int rank(Kind k) {
  switch (k) {
    case Kind::Constant: return 0;
    case Kind::Symbol: return 1;
    default: return 2;
  }
}

}  // namespace

std::strong_ordering operator<=>(const Term& a, const Term& b) {
  if (a.same_node(b)) return std::strong_ordering::equal;
  const int ra = rank(a.kind());
  const int rb = rank(b.kind());
  if (ra != rb) return ra <=> rb;
  if (ra == 0) return compare(a.value(), b.value());
  if (ra == 1) {
    if (auto c = a.name() <=> b.name(); c != 0) return c;
    return a.symtype().str() <=> b.symtype().str();
  }
  if (auto c = operation(a).name() <=> operation(b).name(); c != 0) return c;
  const auto& xs = arguments(a);
  const auto& ys = arguments(b);
  if (auto c = xs.size() <=> ys.size(); c != 0) return c;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (auto c = xs[i] <=> ys[i]; c != 0) return c;
  }
  if (auto c = static_cast<int>(a.kind()) <=> static_cast<int>(b.kind()); c != 0) return c;
  return a.symtype().str() <=> b.symtype().str();
}

// ---- term interface ---------------------------------------------------------------

bool is_tree(const Term& t) { return rank(t.kind()) == 2; }

OpId operation(const Term& t) {
  switch (t.kind()) {
    case Kind::Add: return OpId::add();
    case Kind::Mul: return OpId::mul();
    case Kind::Pow: return OpId::pow();
    case Kind::App: return t.op();
    default: throw ContractError("operation() called on a leaf term");
  }
}

const std::vector<Term>& arguments(const Term& t) {
  const TermNode& n = TermFactory::node(t);
  switch (n.kind) {
    case Kind::Pow:
    case Kind::App: return n.args;
    case Kind::Add:
      std::call_once(n.arguments_once, [&n] {
        if (!exact_zero(n.constant)) n.arguments_cache.emplace_back(n.constant);
        for (const auto& [key, c] : n.entries) {
          if (exact_one(c)) {
            n.arguments_cache.push_back(key);
          } else {
            const Term parts[] = {Term(c), key};
            n.arguments_cache.push_back(mul_terms(parts));
          }
        }
      });
      return n.arguments_cache;
    case Kind::Mul:
      std::call_once(n.arguments_once, [&n] {
        if (!exact_one(n.constant)) n.arguments_cache.emplace_back(n.constant);
        for (const auto& [b, e] : n.entries) n.arguments_cache.push_back(exact_one(e) ? b : pow_terms(b, Term(e)));
      });
      return n.arguments_cache;
    default: throw ContractError("arguments() called on a leaf term");
  }
}

const SymType& symtype(const Term& t) { return t.symtype(); }

Term similar_term(const Term& like, OpId op, std::span<const Term> args, std::optional<SymType> type) {
  if (args.empty()) throw ContractError("similar_term needs at least one argument");
  if (!op.accepts_arity(args.size())) {
    throw Error("arity mismatch: '" + op.name() + "' does not take " + std::to_string(args.size()) + " arguments");
  }
  if (like.is_raw_arithmetic()) return make_app(op, std::vector<Term>(args.begin(), args.end()), std::move(type));
  return build(op, args, std::move(type));
}

// ---- construction -----------------------------------------------------------------

Term make_symbol(std::string_view name, SymType type) {
  const bool ok = !name.empty() && std::isalpha(static_cast<unsigned char>(name.front())) &&
                  std::all_of(name.begin(), name.end(), [](char c) {
                    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
                  });
  if (!ok) throw ParseError("invalid identifier '" + std::string(name) + "'", 1, 1);
  return TermFactory::symbol(std::string(name), std::move(type));
}

Term make_constant(const Constant& value) { return TermFactory::constant(value); }

namespace {

SymType infer_app_type(OpId op, const std::vector<Term>& args) {
  const OpInfo& info = op.info();
  if (info.prim == Prim::User) return info.result;
  SymType t = args.front().symtype();
  for (const Term& a : args) t = join(t, a.symtype());
  switch (info.prim) {
    case Prim::Div: return at_least(t, SymType::Kind::Rational);
    case Prim::Pow: return pow_type(args[0].symtype(), args[1]);
    case Prim::Sin:
    case Prim::Cos:
    case Prim::Tan:
    case Prim::Exp:
    case Prim::Log:
    case Prim::Sqrt: return at_least(t, SymType::Kind::Real);
    default: return t;
  }
}

}  // namespace

Term make_app(OpId op, std::vector<Term> args, std::optional<SymType> type) {
  if (!op.valid()) throw ContractError("make_app with an invalid operator");
  if (!op.accepts_arity(args.size())) {
    throw Error("arity mismatch: '" + op.name() + "' does not take " + std::to_string(args.size()) + " arguments");
  }
  SymType t = type ? std::move(*type) : infer_app_type(op, args);
  return TermFactory::app(op, std::move(args), std::move(t));
}

namespace {

// Coefficients keyed by term. Linear lookup while small, hashed beyond that.
class Accumulator {
 public:
  using iterator = std::vector<Entry>::iterator;

  std::pair<iterator, bool> try_emplace(const Term& key, Constant c) {
    if (items_.capacity() == 0) items_.reserve(4);
    if (index_.empty() && items_.size() < kLinear) {
      const std::uint64_t h = key.hash();
      for (auto it = items_.begin(); it != items_.end(); ++it) {
        if (it->first.hash() == h && it->first == key) return {it, false};
      }
      items_.emplace_back(key, std::move(c));
      return {items_.end() - 1, true};
    }
    if (index_.empty()) reindex();
    auto [slot, fresh] = index_.try_emplace(key, items_.size());
    if (!fresh) return {items_.begin() + static_cast<std::ptrdiff_t>(slot->second), false};
    items_.emplace_back(key, std::move(c));
    return {items_.end() - 1, true};
  }

  void erase(iterator it) {
    items_.erase(it);
    index_.clear();
  }

  std::vector<Entry> take() {
    index_.clear();
    return std::move(items_);
  }

  iterator begin() { return items_.begin(); }
  iterator end() { return items_.end(); }
  std::size_t size() const { return items_.size(); }

 private:
  static constexpr std::size_t kLinear = 16;

  void reindex() {
    index_.reserve(items_.size() * 2);
    for (std::size_t i = 0; i < items_.size(); ++i) index_.emplace(items_[i].first, i);
  }

  std::vector<Entry> items_;
  std::unordered_map<Term, std::size_t, TermHash> index_;
};

void accumulate(Accumulator& acc, const Term& key, const Constant& c) {
  auto [it, inserted] = acc.try_emplace(key, c);
  if (!inserted) it->second = it->second + c;
}

// Integral float exponents are stored exactly so that x^0.5 * x^0.5 collapses to x.
Constant normalize_exponent(const Constant& e) {
  if (!e.is_exact() && e.is_integer()) {
    if (auto n = e.to_long()) return Constant(*n);
  }
  return e;
}

void accumulate_exponent(Accumulator& acc, const Term& base, const Constant& e) {
  auto [it, inserted] = acc.try_emplace(base, normalize_exponent(e));
  if (!inserted) it->second = normalize_exponent(it->second + e);
}

std::vector<Entry> sorted_entries(Accumulator& acc) {
  std::vector<Entry> out = acc.take();
  std::erase_if(out, [](const Entry& e) { return e.second.is_zero(); });
  std::sort(out.begin(), out.end(), [](const Entry& a, const Entry& b) { return (a.first <=> b.first) < 0; });
  return out;
}

// A Pow whose exponent is a constant and whose base can be a Mul map key.
bool absorbable_pow(const Term& t) {
  return t.is_pow() && t.exponent().is_constant() && !t.base().is_constant() && !t.base().is_mul();
}

// A Pow kept whole as a Mul key although its exponent is constant.
bool opaque_constant_pow(const Term& t) {
  return t.is_pow() && t.exponent().is_constant() && (t.base().is_constant() || t.base().is_mul());
}

Term make_product(Constant coeff, std::vector<Entry> entries);

struct ProductAccumulator {
  Constant coeff{1};
  Accumulator bases;

  void absorb(const Term& t) {
    switch (t.kind()) {
      case Kind::Constant: coeff = coeff * t.value(); break;
      case Kind::Mul:
        coeff = coeff * t.coeff();
        for (const auto& [b, e] : t.entries()) accumulate_exponent(bases, b, e);
        break;
      default:
        if (absorbable_pow(t)) {
          accumulate_exponent(bases, t.base(), t.exponent().value());
        } else {
          accumulate_exponent(bases, t, Constant(1));
        }
    }
  }

  Term finish() {
    // Opaque powers raised to an integer may reduce (sqrt(2x)^2 = 2x); re-absorb until stable.
    for (bool again = true; again;) {
      again = false;
      for (auto it = bases.begin(); it != bases.end(); ++it) {
        if (!exact_one(it->second) && it->second.is_integer() && opaque_constant_pow(it->first)) {
          const Term key = it->first;
          const Constant k = it->second;
          bases.erase(it);
          const Term reduced = pow_terms(key, Term(k));
          absorb(reduced);
          again = true;
          break;
        }
      }
    }
    if (coeff.is_zero()) return Term(coeff);
    return make_product(std::move(coeff), sorted_entries(bases));
  }
};

// coeff * prod(b^e) from sorted, reduced entries.
Term make_product(Constant coeff, std::vector<Entry> entries) {
  if (entries.empty()) return Term(coeff);
  if (exact_one(coeff) && entries.size() == 1) {
    if (exact_one(entries[0].second)) return entries[0].first;
    return pow_terms(entries[0].first, Term(entries[0].second));
  }
  SymType type = exact_one(coeff) ? SymType(SymType::Kind::Integer) : coeff.symtype();
  for (const auto& [b, e] : entries) type = join(type, pow_type(b.symtype(), e));
  return TermFactory::sum_or_product(Kind::Mul, std::move(coeff), std::move(entries), std::move(type));
}

}  // namespace

Term add_terms(std::span<const Term> args) {
  Constant coeff(0);
  Accumulator acc;
  auto add_scaled_sum = [&](const Term& sum, const Constant& scale) {
    coeff = coeff + scale * sum.coeff();
    for (const auto& [t, c] : sum.entries()) accumulate(acc, t, scale * c);
  };
  for (const Term& a : args) {
    require_numeric(a, "addition");
    switch (a.kind()) {
      case Kind::Constant: coeff = coeff + a.value(); break;
      case Kind::Add: add_scaled_sum(a, Constant(1)); break;
      case Kind::Mul: {
        const auto entries = a.entries();
        if (entries.size() == 1 && exact_one(entries[0].second) && entries[0].first.is_add()) {
          add_scaled_sum(entries[0].first, a.coeff());  // c*(u+v) distributes, keys are never sums
          break;
        }
        if (exact_one(a.coeff())) {
          accumulate(acc, a, a.coeff());
        } else {
          accumulate(acc, make_product(Constant(1), {entries.begin(), entries.end()}), a.coeff());
        }
        break;
      }
      default: accumulate(acc, a, Constant(1));
    }
  }
  std::vector<Entry> entries = sorted_entries(acc);
  if (entries.empty()) return Term(coeff);
  if (exact_zero(coeff) && entries.size() == 1) {
    if (exact_one(entries[0].second)) return entries[0].first;
    const Term parts[] = {Term(entries[0].second), entries[0].first};
    return mul_terms(parts);
  }
  SymType type = exact_zero(coeff) ? SymType(SymType::Kind::Integer) : coeff.symtype();
  for (const auto& [t, c] : entries) type = join(type, join(t.symtype(), c.symtype()));
  return TermFactory::sum_or_product(Kind::Add, std::move(coeff), std::move(entries), std::move(type));
}

Term mul_terms(std::span<const Term> args) {
  ProductAccumulator acc;
  for (const Term& a : args) {
    require_numeric(a, "multiplication");
    acc.absorb(a);
  }
  return acc.finish();
}

Term pow_terms(const Term& base, const Term& exponent) {
  require_numeric(base, "exponentiation");
  require_numeric(exponent, "exponentiation");
  if (exponent.is_constant()) {
    const Constant& e = exponent.value();
    if (e.is_zero()) {
      if (base.is_constant() && base.value().is_zero() && base.value().is_exact() && e.is_exact()) {
        throw DomainError("0^0 is undefined");
      }
      return Term(e.is_exact() ? Constant(1) : Constant(1.0));
    }
    if (e.is_one() && e.is_exact()) return base;
    if (e.is_one()) return base.is_constant() ? Term(Constant(base.value().to_double())) : base;
    if (base.is_constant()) {
      if (auto folded = Constant::pow(base.value(), e)) return Term(*folded);
      return TermFactory::power(base, exponent);
    }
    if (e.is_integer()) {
      if (base.is_mul()) {
        auto coeff = Constant::pow(base.coeff(), e);
        if (coeff) {
          ProductAccumulator acc;
          acc.coeff = *coeff;
          for (const auto& [b, be] : base.entries()) accumulate_exponent(acc.bases, b, be * e);
          return acc.finish();
        }
      } else if (base.is_pow() && base.exponent().is_constant()) {
        return pow_terms(base.base(), Term(base.exponent().value() * e));
      }
    }
  }
  return TermFactory::power(base, exponent);
}

namespace {

std::optional<double> fold_function(Prim prim, std::span<const Term> args) {
  for (const Term& a : args) {
    if (!a.is_constant() || a.value().is_exact()) return std::nullopt;
  }
  const double x = args[0].value().inexact();
  switch (prim) {
    case Prim::Sin: return std::sin(x);
    case Prim::Cos: return std::cos(x);
    case Prim::Tan: return std::tan(x);
    case Prim::Exp: return std::exp(x);
    case Prim::Log: return std::log(x);
    case Prim::Sqrt: return std::sqrt(x);
    case Prim::Abs: return std::fabs(x);
    case Prim::Min:
    case Prim::Max: {
      double r = x;
      for (const Term& a : args) r = prim == Prim::Min ? std::fmin(r, a.value().inexact()) : std::fmax(r, a.value().inexact());
      return r;
    }
    default: return std::nullopt;
  }
}

}  // namespace

Term build(OpId op, std::span<const Term> args, std::optional<SymType> type) {
  if (!op.accepts_arity(args.size())) {
    throw Error("arity mismatch: '" + op.name() + "' does not take " + std::to_string(args.size()) + " arguments");
  }
  switch (op.prim()) {
    case Prim::Add: return add_terms(args);
    case Prim::Mul: return mul_terms(args);
    case Prim::Pow: return pow_terms(args[0], args[1]);
    case Prim::Sub: {
      if (args.size() == 1) {
        const Term parts[] = {Term(-1), args[0]};
        return mul_terms(parts);
      }
      const Term neg_parts[] = {Term(-1), args[1]};
      const Term parts[] = {args[0], mul_terms(neg_parts)};
      return add_terms(parts);
    }
    case Prim::Div: {
      const Term parts[] = {args[0], pow_terms(args[1], Term(-1))};
      return mul_terms(parts);
    }
    default:
      if (op.prim() != Prim::User) {
        for (const Term& a : args) require_numeric(a, op.name().c_str());
        if (auto folded = fold_function(op.prim(), args)) return Term(Constant(*folded));
      }
      return make_app(op, std::vector<Term>(args.begin(), args.end()), std::move(type));
  }
}

Term canonicalize(const Term& t) {
  if (!is_tree(t)) return t;
  const auto& args = arguments(t);
  std::vector<Term> rebuilt;
  rebuilt.reserve(args.size());
  bool changed = t.is_raw_arithmetic();
  for (const Term& a : args) {
    rebuilt.push_back(canonicalize(a));
    changed = changed || !rebuilt.back().same_node(a);
  }
  if (!changed) return t;
  if (t.is_app() && t.op().prim() == Prim::User) return build(t.op(), rebuilt, t.symtype());
  if (t.is_app() && !t.op().is_arithmetic()) return build(t.op(), rebuilt);
  return build(operation(t), rebuilt);
}

Term operator+(const Term& a, const Term& b) {
  const Term parts[] = {a, b};
  return add_terms(parts);
}
Term operator-(const Term& a, const Term& b) {
  const Term parts[] = {a, b};
  return build(OpId::sub(), parts);
}
Term operator*(const Term& a, const Term& b) {
  const Term parts[] = {a, b};
  return mul_terms(parts);
}
Term operator/(const Term& a, const Term& b) {
  const Term parts[] = {a, b};
  return build(OpId::div(), parts);
}
Term operator-(const Term& a) {
  const Term parts[] = {a};
  return build(OpId::sub(), parts);
}
Term pow(const Term& base, const Term& exponent) { return pow_terms(base, exponent); }

Term apply(Prim prim, std::vector<Term> args) { return build(OpId::of(prim), args); }
Term sin(const Term& t) { return apply(Prim::Sin, {t}); }
Term cos(const Term& t) { return apply(Prim::Cos, {t}); }
Term tan(const Term& t) { return apply(Prim::Tan, {t}); }
Term exp(const Term& t) { return apply(Prim::Exp, {t}); }
Term log(const Term& t) { return apply(Prim::Log, {t}); }
Term sqrt(const Term& t) { return apply(Prim::Sqrt, {t}); }

std::size_t node_count(const Term& t) {
  if (!is_tree(t)) return 1;
  std::size_t n = 1;
  for (const Term& a : arguments(t)) n += node_count(a);
  return n;
}

std::size_t depth(const Term& t) {
  if (!is_tree(t)) return 1;
  std::size_t d = 0;
  for (const Term& a : arguments(t)) d = std::max(d, depth(a));
  return d + 1;
}

}  // namespace symx

#include "symx/op.hpp"

#include "symx/error.hpp"

#include <array>
#include <deque>
#include <map>
#include <mutex>

namespace symx {

namespace {

const std::array<OpInfo, 14>& primitives() {
  static const std::array<OpInfo, 14> table = {{
      {"+", 1, -1, Prim::Add, {}, true},
      {"*", 1, -1, Prim::Mul, {}, true},
      {"-", 1, 2, Prim::Sub, {}, false},
      {"/", 2, 2, Prim::Div, {}, false},
      {"^", 2, 2, Prim::Pow, {}, false},
      {"sin", 1, 1, Prim::Sin, {}, false},
      {"cos", 1, 1, Prim::Cos, {}, false},
      {"tan", 1, 1, Prim::Tan, {}, false},
      {"exp", 1, 1, Prim::Exp, {}, false},
      {"log", 1, 1, Prim::Log, {}, false},
      {"sqrt", 1, 1, Prim::Sqrt, {}, false},
      {"abs", 1, 1, Prim::Abs, {}, false},
      {"min", 2, -1, Prim::Min, {}, true},
      {"max", 2, -1, Prim::Max, {}, true},
  }};
  return table;
}

struct UserRegistry {
  std::mutex mutex;
  std::deque<OpInfo> storage;  // stable addresses
  std::map<std::string, const OpInfo*, std::less<>> by_name;
};

UserRegistry& registry() {
  static UserRegistry r;
  return r;
}

}  // namespace

OpId OpId::of(Prim prim) {
  if (prim == Prim::User) throw ContractError("OpId::of requires a primitive");
  return OpId(&primitives()[static_cast<std::size_t>(prim)]);
}

OpId OpId::add() { return of(Prim::Add); }
OpId OpId::mul() { return of(Prim::Mul); }
OpId OpId::sub() { return of(Prim::Sub); }
OpId OpId::div() { return of(Prim::Div); }
OpId OpId::pow() { return of(Prim::Pow); }

std::optional<OpId> OpId::find(std::string_view name) {
  for (const OpInfo& info : primitives()) {
    if (info.name == name) return OpId(&info);
  }
  UserRegistry& r = registry();
  std::lock_guard lock(r.mutex);
  auto it = r.by_name.find(name);
  if (it == r.by_name.end()) return std::nullopt;
  return OpId(it->second);
}

OpId OpId::declare(const std::string& name, int arity, SymType result) {
  for (const OpInfo& info : primitives()) {
    if (info.name == name) throw Error("cannot redeclare primitive '" + name + "'");
  }
  if (arity < 0) throw Error("function '" + name + "' needs a fixed arity");
  UserRegistry& r = registry();
  std::lock_guard lock(r.mutex);
  if (auto it = r.by_name.find(name); it != r.by_name.end()) {
    const OpInfo& existing = *it->second;
    if (existing.min_arity != arity || !(existing.result == result)) {
      throw Error("conflicting declaration of function '" + name + "'");
    }
    return OpId(&existing);
  }
  OpInfo& info = r.storage.emplace_back(OpInfo{name, arity, arity, Prim::User, std::move(result), false});
  r.by_name.emplace(name, &info);
  return OpId(&info);
}

bool OpId::accepts_arity(std::size_t n) const {
  const auto k = static_cast<int>(n);
  return k >= info_->min_arity && (info_->max_arity < 0 || k <= info_->max_arity);
}

bool OpId::is_arithmetic() const {
  switch (info_->prim) {
    case Prim::Add:
    case Prim::Mul:
    case Prim::Sub:
    case Prim::Div:
    case Prim::Pow: return true;
    default: return false;
  }
}

}  // namespace symx

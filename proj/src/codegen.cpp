#include "symx/codegen.hpp"

#include "symx/analysis.hpp"
#include "symx/cost.hpp"
#include "symx/error.hpp"

#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

namespace symx {

IRPtr ir(IRExpr e) { return std::make_shared<const IRNode>(IRNode{std::move(e)}); }
IRPtr ir(LetBlock b) { return std::make_shared<const IRNode>(IRNode{std::move(b)}); }
IRPtr ir(MakeArray a) { return std::make_shared<const IRNode>(IRNode{std::move(a)}); }
IRPtr ir(MapReduce m) { return std::make_shared<const IRNode>(IRNode{std::move(m)}); }

FuncDef build_function(const std::vector<Term>& exprs, const std::vector<Term>& params, std::string name) {
  if (exprs.empty()) throw Error("build_function needs at least one expression");
  std::set<std::string> names;
  for (const Term& p : params) {
    if (!p.is_symbol()) throw Error("function parameters must be symbols");
    if (!names.insert(p.name()).second) throw Error("duplicate parameter '" + p.name() + "'");
  }
  for (const Term& e : exprs) {
    for (const Term& s : free_symbols(e)) {
      if (!names.contains(s.name())) throw Error("symbol '" + s.name() + "' is not a parameter");
    }
  }
  FuncDef f;
  f.name = std::move(name);
  f.params = params;
  if (exprs.size() == 1) {
    f.body = ir(IRExpr{exprs[0]});
  } else {
    MakeArray arr;
    for (const Term& e : exprs) arr.elements.push_back(IRExpr{e});
    f.body = ir(std::move(arr));
  }
  return f;
}

namespace {

using Scope = std::vector<std::string>;

void check_expr(const IRExpr& e, const Scope& scope) {
  for (const Term& s : free_symbols(e.term)) {
    if (std::find(scope.begin(), scope.end(), s.name()) == scope.end()) {
      throw Error("symbol '" + s.name() + "' is not bound");
    }
  }
}

void check_node(const IRNode& n, Scope& scope);

void check_func(const FuncDef& f, Scope scope) {
  std::set<std::string> names;
  for (const Term& p : f.params) {
    if (!p.is_symbol()) throw Error("function parameters must be symbols");
    if (!names.insert(p.name()).second) throw Error("duplicate parameter '" + p.name() + "'");
    scope.push_back(p.name());
  }
  if (!f.body) throw Error("function '" + f.name + "' has no body");
  check_node(*f.body, scope);
}

void check_node(const IRNode& n, Scope& scope) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, IRExpr>) {
          check_expr(v, scope);
        } else if constexpr (std::is_same_v<T, Assignment>) {
          check_expr(v.value, scope);
          scope.push_back(v.target);
        } else if constexpr (std::is_same_v<T, LetBlock>) {
          const std::size_t mark = scope.size();
          for (const Assignment& a : v.bindings) {
            check_expr(a.value, scope);
            scope.push_back(a.target);
          }
          check_node(*v.body, scope);
          scope.resize(mark);
        } else if constexpr (std::is_same_v<T, MakeArray>) {
          for (const IRExpr& e : v.elements) check_expr(e, scope);
        } else if constexpr (std::is_same_v<T, MapReduce>) {
          if (!v.map || v.map->params.size() != 1) throw Error("map-reduce needs a one-parameter map function");
          if (!v.over || !std::holds_alternative<MakeArray>(v.over->value)) throw Error("map-reduce input must be an array");
          check_node(*v.over, scope);
          check_func(*v.map, scope);
        } else {
          check_func(v, scope);
        }
      },
      n.value);
}

bool ac_reducer(const OpId& op) {
  const Prim p = op.prim();
  return p == Prim::Add || p == Prim::Mul || p == Prim::Min || p == Prim::Max;
}

double combine(Prim p, double a, double b) {
  switch (p) {
    case Prim::Add: return a + b;
    case Prim::Mul: return a * b;
    case Prim::Min: return std::fmin(a, b);
    case Prim::Max: return std::fmax(a, b);
    default: throw Error("not an associative-commutative reducer");
  }
}

std::optional<long> small_power(const Term& e) {
  if (!e.is_constant() || !e.value().is_exact_integer()) return std::nullopt;
  auto n = e.value().to_long();
  if (n && *n >= 2 && *n <= kPowerExpansionMax) return n;
  return std::nullopt;
}

class Lowerer {
 public:
  Lowerer(const FuncDef& f, const RuntimeBindings& runtime) : f_(f) { bc_.runtime = runtime; }

  Bytecode run() {
    check_function(f_);
    for (const Term& p : f_.params) {
      args_.push_back(p.name());
      bc_.arg_names.push_back(p.name());
    }
    bc_.n_args = args_.size();
    node(*f_.body);
    auto problems = verify_bytecode(bc_);
    if (!problems.empty()) throw Error("internal error: bytecode failed verification: " + problems[0]);
    return std::move(bc_);
  }

 private:
  void emit(OpCode code, std::size_t n = 0, double k = 0, OpId op = {}) { bc_.code.push_back({code, n, k, op}); }

  std::size_t new_local(const std::string& name) {
    bc_.local_names.push_back(name);
    return bc_.n_locals++;
  }

  void load(const std::string& name) {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it) {
      if (it->first == name) return emit(OpCode::LoadLocal, it->second);
    }
    for (std::size_t i = 0; i < args_.size(); ++i) {
      if (args_[i] == name) return emit(OpCode::LoadArg, i);
    }
    throw Error("symbol '" + name + "' is not bound");
  }

  void tree(const Term& t) {
    if (t.is_constant()) return emit(OpCode::PushConst, 0, t.value().to_double());
    if (t.is_symbol()) return load(t.name());
    if (!t.is_app()) return tree(lower_binary(t));
    const auto args = t.args();
    if (t.op().prim() == Prim::Pow) {
      if (auto n = small_power(args[1])) return power(args[0], *n);
    }
    if (t.op().prim() == Prim::User && !bc_.runtime.contains(t.op().name())) {
      throw Error("no runtime binding for uninterpreted function '" + t.op().name() + "'");
    }
    for (const Term& a : args) tree(a);
    emit(OpCode::Call, args.size(), 0, t.op());
  }

  void power(const Term& base, long n) {
    if (base.is_constant() || base.is_symbol()) {
      tree(base);
      for (long i = 1; i < n; ++i) {
        tree(base);
        emit(OpCode::Call, 2, 0, OpId::mul());
      }
      return;
    }
    tree(base);
    const std::size_t slot = new_local("pow" + std::to_string(bc_.n_locals));
    emit(OpCode::StoreLocal, slot);
    emit(OpCode::LoadLocal, slot);
    for (long i = 1; i < n; ++i) {
      emit(OpCode::LoadLocal, slot);
      emit(OpCode::Call, 2, 0, OpId::mul());
    }
  }

  void expr(const IRExpr& e) { tree(lower_binary(e.term)); }

  void node(const IRNode& n) {
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, IRExpr>) {
            expr(v);
            bc_.n_outputs = 1;
          } else if constexpr (std::is_same_v<T, MakeArray>) {
            for (const IRExpr& e : v.elements) expr(e);
            emit(OpCode::MakeArray, v.elements.size());
            bc_.n_outputs = v.elements.size();
          } else if constexpr (std::is_same_v<T, LetBlock>) {
            const std::size_t mark = scope_.size();
            for (const Assignment& a : v.bindings) {
              expr(a.value);
              const std::size_t slot = new_local(a.target);
              emit(OpCode::StoreLocal, slot);
              scope_.emplace_back(a.target, slot);
            }
            node(*v.body);
            scope_.resize(mark);
          } else if constexpr (std::is_same_v<T, MapReduce>) {
            if (!ac_reducer(v.reduce)) throw Error("map-reduce reducer must be one of + * min max");
            const auto& elems = std::get<MakeArray>(v.over->value).elements;
            std::vector<std::size_t> slots;
            for (const IRExpr& e : elems) {
              expr(e);
              slots.push_back(new_local("elem" + std::to_string(bc_.n_locals)));
              emit(OpCode::StoreLocal, slots.back());
            }
            const std::string& param = v.map->params[0].name();
            const IRExpr& body = std::get<IRExpr>(v.map->body->value);
            for (std::size_t slot : slots) {
              scope_.emplace_back(param, slot);
              expr(body);
              scope_.pop_back();
            }
            emit(OpCode::Reduce, elems.size(), v.init.to_double(), v.reduce);
            bc_.n_outputs = 1;
          } else {
            throw Error("unsupported function body");
          }
        },
        n.value);
  }

  const FuncDef& f_;
  Bytecode bc_;
  std::vector<std::string> args_;
  std::vector<std::pair<std::string, std::size_t>> scope_;
};

}  // namespace

void check_function(const FuncDef& f) { check_func(f, {}); }

Bytecode lower_to_bytecode(const FuncDef& f, const RuntimeBindings& runtime) { return Lowerer(f, runtime).run(); }

std::vector<std::string> verify_bytecode(const Bytecode& bc) {
  std::vector<std::string> out;
  std::vector<bool> stored(bc.n_locals, false);
  std::size_t depth = 0;
  auto where = [](std::size_t pc) { return "at " + std::to_string(pc) + ": "; };
  bool array_seen = false;
  for (std::size_t pc = 0; pc < bc.code.size(); ++pc) {
    const Instr& in = bc.code[pc];
    if (array_seen) out.push_back(where(pc) + "instruction after MAKE_ARRAY");
    switch (in.code) {
      case OpCode::PushConst: ++depth; break;
      case OpCode::LoadArg:
        if (in.n >= bc.n_args) out.push_back(where(pc) + "argument index out of range");
        ++depth;
        break;
      case OpCode::LoadLocal:
        if (in.n >= bc.n_locals) {
          out.push_back(where(pc) + "local index out of range");
        } else if (!stored[in.n]) {
          out.push_back(where(pc) + "local loaded before it is stored");
        }
        ++depth;
        break;
      case OpCode::StoreLocal:
        if (depth < 1) {
          out.push_back(where(pc) + "stack underflow");
        } else {
          --depth;
        }
        if (in.n >= bc.n_locals) {
          out.push_back(where(pc) + "local index out of range");
        } else {
          stored[in.n] = true;
        }
        break;
      case OpCode::Call:
        if (!in.op.valid() || !in.op.accepts_arity(in.n)) out.push_back(where(pc) + "bad call arity");
        if (in.op.valid() && in.op.prim() == Prim::User && !bc.runtime.contains(in.op.name())) {
          out.push_back(where(pc) + "no runtime binding for '" + in.op.name() + "'");
        }
        if (depth < in.n) {
          out.push_back(where(pc) + "stack underflow");
          depth = 1;
        } else {
          depth = depth - in.n + 1;
        }
        break;
      case OpCode::MakeArray:
        array_seen = true;
        if (depth != in.n) out.push_back(where(pc) + "MAKE_ARRAY count does not match the stack");
        if (bc.n_outputs != in.n) out.push_back(where(pc) + "MAKE_ARRAY count does not match n_outputs");
        break;
      case OpCode::Reduce:
        if (!in.op.valid() || !ac_reducer(in.op)) out.push_back(where(pc) + "REDUCE needs + * min or max");
        if (depth < in.n) {
          out.push_back(where(pc) + "stack underflow");
          depth = 1;
        } else {
          depth = depth - in.n + 1;
        }
        break;
    }
  }
  if (depth != bc.n_outputs) {
    out.push_back("final stack depth " + std::to_string(depth) + " differs from n_outputs " + std::to_string(bc.n_outputs));
  }
  return out;
}

namespace {

double call(const Instr& in, const double* a, const Bytecode& bc) {
  const std::size_t n = in.n;
  switch (in.op.prim()) {
    case Prim::Add: {
      double s = a[0];
      for (std::size_t i = 1; i < n; ++i) s += a[i];
      return s;
    }
    case Prim::Mul: {
      double p = a[0];
      for (std::size_t i = 1; i < n; ++i) p *= a[i];
      return p;
    }
    case Prim::Sub: return n == 1 ? -a[0] : a[0] - a[1];
    case Prim::Div: return a[0] / a[1];
    case Prim::Pow: return std::pow(a[0], a[1]);
    case Prim::Sin: return std::sin(a[0]);
    case Prim::Cos: return std::cos(a[0]);
    case Prim::Tan: return std::tan(a[0]);
    case Prim::Exp: return std::exp(a[0]);
    case Prim::Log: return std::log(a[0]);
    case Prim::Sqrt: return std::sqrt(a[0]);
    case Prim::Abs: return std::fabs(a[0]);
    case Prim::Min:
    case Prim::Max: {
      double r = a[0];
      for (std::size_t i = 1; i < n; ++i) r = combine(in.op.prim(), r, a[i]);
      return r;
    }
    case Prim::User: return bc.runtime.at(in.op.name())(std::span<const double>(a, n));
  }
  return 0;
}

}  // namespace

std::vector<double> exec_bytecode(const Bytecode& bc, std::span<const double> args) {
  if (args.size() != bc.n_args) {
    throw Error("expected " + std::to_string(bc.n_args) + " arguments, got " + std::to_string(args.size()));
  }
  std::vector<double> stack;
  stack.reserve(16);
  std::vector<double> locals(bc.n_locals, 0.0);
  for (const Instr& in : bc.code) {
    switch (in.code) {
      case OpCode::PushConst: stack.push_back(in.k); break;
      case OpCode::LoadArg: stack.push_back(args[in.n]); break;
      case OpCode::LoadLocal: stack.push_back(locals[in.n]); break;
      case OpCode::StoreLocal:
        locals[in.n] = stack.back();
        stack.pop_back();
        break;
      case OpCode::Call: {
        const std::size_t base = stack.size() - in.n;
        const double r = call(in, stack.data() + base, bc);
        stack.resize(base);
        stack.push_back(r);
        break;
      }
      case OpCode::MakeArray: break;
      case OpCode::Reduce: {
        const std::size_t base = stack.size() - in.n;
        double acc = in.k;
        for (std::size_t i = base; i < stack.size(); ++i) acc = combine(in.op.prim(), acc, stack[i]);
        stack.resize(base);
        stack.push_back(acc);
        break;
      }
    }
  }
  return stack;
}

std::string disassemble(const Bytecode& bc) {
  std::ostringstream os;
  os << "; args=" << bc.n_args << " locals=" << bc.n_locals << " outputs=" << bc.n_outputs << "\n";
  for (const Instr& in : bc.code) {
    switch (in.code) {
      case OpCode::PushConst: os << "PUSH_CONST " << Constant(in.k).str(); break;
      case OpCode::LoadArg: os << "LOAD_ARG " << in.n << "  ; " << bc.arg_names[in.n]; break;
      case OpCode::LoadLocal: os << "LOAD_LOCAL " << in.n << "  ; " << bc.local_names[in.n]; break;
      case OpCode::StoreLocal: os << "STORE_LOCAL " << in.n << "  ; " << bc.local_names[in.n]; break;
      case OpCode::Call: os << "CALL " << in.op.name() << " " << in.n; break;
      case OpCode::MakeArray: os << "MAKE_ARRAY " << in.n; break;
      case OpCode::Reduce: os << "REDUCE " << in.op.name() << " " << in.n << " " << Constant(in.k).str(); break;
    }
    os << "\n";
  }
  return os.str();
}

// ---- sexpr -------------------------------------------------------------------------------

namespace {

std::string sexpr_constant(const Constant& c) {
  if (c.is_exact() && !c.is_exact_integer()) {
    return "(/ " + c.exact().get_num().get_str() + " " + c.exact().get_den().get_str() + ")";
  }
  return c.str();
}

std::string sexpr_tree(const Term& t) {
  if (t.is_constant()) return sexpr_constant(t.value());
  if (t.is_symbol()) return t.name();
  if (!t.is_app()) return sexpr_tree(lower_binary(t));
  std::string s = "(" + t.op().name();
  for (const Term& a : t.args()) s += " " + sexpr_tree(a);
  return s + ")";
}

std::string sexpr_node(const IRNode& n);

std::string sexpr_func(const FuncDef& f, const char* head) {
  std::string s = std::string("(") + head + (std::string(head) == "defun" ? " " + f.name : "") + " (";
  for (std::size_t i = 0; i < f.params.size(); ++i) s += (i ? " " : "") + f.params[i].name();
  return s + ") " + sexpr_node(*f.body) + ")";
}

std::string sexpr_node(const IRNode& n) {
  return std::visit(
      [&](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, IRExpr>) {
          return render_sexpr(v.term);
        } else if constexpr (std::is_same_v<T, Assignment>) {
          return "(" + v.target + " " + render_sexpr(v.value.term) + ")";
        } else if constexpr (std::is_same_v<T, LetBlock>) {
          std::string s = "(let (";
          for (std::size_t i = 0; i < v.bindings.size(); ++i) {
            s += (i ? " " : "") + std::string("(") + v.bindings[i].target + " " + render_sexpr(v.bindings[i].value.term) + ")";
          }
          return s + ") " + sexpr_node(*v.body) + ")";
        } else if constexpr (std::is_same_v<T, MakeArray>) {
          std::string s = "(array";
          for (const IRExpr& e : v.elements) s += " " + render_sexpr(e.term);
          return s + ")";
        } else if constexpr (std::is_same_v<T, MapReduce>) {
          return "(mapreduce " + sexpr_func(*v.map, "lambda") + " " + v.reduce.name() + " " + sexpr_constant(v.init) + " " +
                 sexpr_node(*v.over) + ")";
        } else {
          return sexpr_func(v, "defun");
        }
      },
      n.value);
}

struct SNode {
  bool atom = true;
  std::string text;
  std::vector<SNode> items;
  std::size_t column = 1;
};

class SexprReader {
 public:
  explicit SexprReader(std::string_view text) : text_(text) {}

  SNode read_all() {
    SNode n = read();
    skip();
    if (pos_ < text_.size()) fail("trailing input");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, pos_ - line_start_ + 1); }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') {
        ++line_;
        line_start_ = pos_ + 1;
      }
      ++pos_;
    }
  }

  SNode read() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    SNode n;
    n.column = pos_ - line_start_ + 1;
    if (text_[pos_] == '(') {
      ++pos_;
      n.atom = false;
      while (true) {
        skip();
        if (pos_ >= text_.size()) fail("unclosed '('");
        if (text_[pos_] == ')') {
          ++pos_;
          return n;
        }
        n.items.push_back(read());
      }
    }
    if (text_[pos_] == ')') fail("unexpected ')'");
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
           text_[pos_] != ')') {
      ++pos_;
    }
    n.text = std::string(text_.substr(start, pos_ - start));
    return n;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t line_start_ = 0;
};

class SexprBuilder {
 public:
  explicit SexprBuilder(const std::vector<Term>& known) {
    for (const Term& k : known) {
      if (k.is_symbol()) known_.emplace(k.name(), k);
    }
  }

  Term expr(const SNode& n) {
    if (n.atom) {
      const char c = n.text[0];
      const bool numeric = std::isdigit(static_cast<unsigned char>(c)) ||
                           ((c == '-' || c == '.') && n.text.size() > 1 &&
                            (std::isdigit(static_cast<unsigned char>(n.text[1])) || n.text[1] == '.'));
      if (numeric) {
        try {
          return Term(Constant::parse(n.text));
        } catch (const Error& e) {
          throw ParseError("bad number '" + n.text + "'", 1, n.column);
        }
      }
      if (n.text == "inf") return Term(Constant(HUGE_VAL));
      if (n.text == "-inf") return Term(Constant(-HUGE_VAL));
      if (n.text == "nan") return Term(Constant(std::nan("")));
      auto it = known_.find(n.text);
      if (it != known_.end()) return it->second;
      return make_symbol(n.text);
    }
    if (n.items.empty() || !n.items[0].atom) throw ParseError("expected an operator", 1, n.column);
    const std::string& head = n.items[0].text;
    std::vector<Term> args;
    for (std::size_t i = 1; i < n.items.size(); ++i) args.push_back(expr(n.items[i]));
    if (args.empty()) throw ParseError("operator '" + head + "' needs arguments", 1, n.column);
    std::optional<OpId> op = OpId::find(head);
    if (!op) op = OpId::declare(head, static_cast<int>(args.size()));
    if (!op->accepts_arity(args.size())) throw ParseError("wrong number of arguments to '" + head + "'", 1, n.column);
    return make_app(*op, std::move(args));
  }

  FuncDef func(const SNode& n, const char* head) {
    const bool defun = std::string(head) == "defun";
    const std::size_t want = defun ? 4 : 3;
    if (n.atom || n.items.size() != want || n.items[0].text != head) {
      throw ParseError(std::string("expected (") + head + (defun ? " name" : "") + " (params...) body)", 1, n.column);
    }
    FuncDef f;
    std::size_t i = 1;
    f.name = defun ? n.items[i++].text : "lambda";
    const SNode& ps = n.items[i++];
    if (ps.atom) throw ParseError("expected a parameter list", 1, ps.column);
    for (const SNode& p : ps.items) {
      if (!p.atom) throw ParseError("parameters must be names", 1, p.column);
      auto it = known_.find(p.text);
      f.params.push_back(it != known_.end() ? it->second : make_symbol(p.text));
    }
    f.body = body(n.items[i]);
    return f;
  }

  IRPtr body(const SNode& n) {
    if (!n.atom && !n.items.empty() && n.items[0].atom) {
      const std::string& head = n.items[0].text;
      if (head == "array") {
        MakeArray arr;
        for (std::size_t i = 1; i < n.items.size(); ++i) arr.elements.push_back(IRExpr{expr(n.items[i])});
        return ir(std::move(arr));
      }
      if (head == "let") {
        if (n.items.size() != 3 || n.items[1].atom) throw ParseError("expected (let ((name expr)...) body)", 1, n.column);
        LetBlock let;
        for (const SNode& b : n.items[1].items) {
          if (b.atom || b.items.size() != 2 || !b.items[0].atom) throw ParseError("bad let binding", 1, b.column);
          let.bindings.push_back({b.items[0].text, IRExpr{expr(b.items[1])}});
        }
        let.body = body(n.items[2]);
        return ir(std::move(let));
      }
      if (head == "mapreduce") {
        if (n.items.size() != 5) throw ParseError("expected (mapreduce (lambda (p) body) op init (array ...))", 1, n.column);
        MapReduce mr;
        mr.map = std::make_shared<const FuncDef>(func(n.items[1], "lambda"));
        auto op = OpId::find(n.items[2].text);
        if (!op) throw ParseError("unknown reducer '" + n.items[2].text + "'", 1, n.items[2].column);
        mr.reduce = *op;
        Term init = canonicalize(expr(n.items[3]));
        if (!init.is_constant()) throw ParseError("map-reduce init must be a number", 1, n.items[3].column);
        mr.init = init.value();
        mr.over = body(n.items[4]);
        return ir(std::move(mr));
      }
    }
    return ir(IRExpr{expr(n)});
  }

 private:
  std::map<std::string, Term> known_;
};

// ---- pseudo-c ----------------------------------------------------------------------------

struct CText {
  std::string text;
  int prec;
};

std::string c_wrap(const CText& c, int min_prec) { return c.prec < min_prec ? "(" + c.text + ")" : c.text; }

CText c_constant(const Constant& c) {
  if (c.is_exact() && !c.is_exact_integer()) {
    return {c.exact().get_num().get_str() + ".0/" + c.exact().get_den().get_str() + ".0", 2};
  }
  std::string s = c.str();
  if (s == "nan") return {"NAN", 4};
  if (s == "inf") return {"INFINITY", 4};
  if (s == "-inf") return {"-INFINITY", 3};
  return {s, c.is_negative() ? 3 : 4};
}

CText c_tree(const Term& t) {
  if (t.is_constant()) return c_constant(t.value());
  if (t.is_symbol()) return {t.name(), 4};
  if (!t.is_app()) return c_tree(lower_binary(t));
  const auto args = t.args();
  auto fold = [&](const char* sep, int prec) {
    std::string s = c_wrap(c_tree(args[0]), prec);
    for (std::size_t i = 1; i < args.size(); ++i) s += sep + c_wrap(c_tree(args[i]), prec + 1);
    return CText{s, prec};
  };
  auto call = [&](const std::string& name, std::size_t from, std::size_t to) {
    std::string s = name + "(";
    for (std::size_t i = from; i < to; ++i) s += (i > from ? ", " : "") + c_tree(args[i]).text;
    return s + ")";
  };
  switch (t.op().prim()) {
    case Prim::Add: return fold(" + ", 1);
    case Prim::Mul: return fold(" * ", 2);
    case Prim::Div: return fold(" / ", 2);
    case Prim::Sub:
      if (args.size() == 1) return {"-" + c_wrap(c_tree(args[0]), 4), 3};
      return fold(" - ", 1);
    case Prim::Pow: return {call("pow", 0, 2), 4};
    case Prim::Abs: return {call("fabs", 0, 1), 4};
    case Prim::Min:
    case Prim::Max: {
      const std::string name = t.op().prim() == Prim::Min ? "fmin" : "fmax";
      std::string s = c_tree(args[0]).text;
      for (std::size_t i = 1; i < args.size(); ++i) s = name + "(" + s + ", " + c_tree(args[i]).text + ")";
      return {s, 4};
    }
    default: return {call(t.op().name(), 0, args.size()), 4};
  }
}

std::string c_expr(const Term& t) { return c_tree(lower_binary(t)).text; }

std::string c_params(const FuncDef& f, bool out) {
  std::string s;
  for (std::size_t i = 0; i < f.params.size(); ++i) s += (i ? ", " : "") + std::string("double ") + f.params[i].name();
  if (out) s += (f.params.empty() ? "" : ", ") + std::string("double* out");
  return s;
}

void c_body(const IRNode& n, std::ostringstream& os, const std::string& indent) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, IRExpr>) {
          os << indent << "return " << c_expr(v.term) << ";\n";
        } else if constexpr (std::is_same_v<T, MakeArray>) {
          for (std::size_t i = 0; i < v.elements.size(); ++i) {
            os << indent << "out[" << i << "] = " << c_expr(v.elements[i].term) << ";\n";
          }
        } else if constexpr (std::is_same_v<T, LetBlock>) {
          for (const Assignment& a : v.bindings) os << indent << "double " << a.target << " = " << c_expr(a.value.term) << ";\n";
          c_body(*v.body, os, indent);
        } else if constexpr (std::is_same_v<T, MapReduce>) {
          const auto& elems = std::get<MakeArray>(v.over->value).elements;
          const Term& param = v.map->params[0];
          const Term& body = std::get<IRExpr>(v.map->body->value).term;
          os << indent << "double acc = " << c_constant(v.init).text << ";\n";
          for (const IRExpr& e : elems) {
            std::unordered_map<Term, Term, TermHash> bind{{param, e.term}};
            const std::string value = c_expr(substitute(body, bind));
            switch (v.reduce.prim()) {
              case Prim::Add: os << indent << "acc = acc + " << value << ";\n"; break;
              case Prim::Mul: os << indent << "acc = acc * (" << value << ");\n"; break;
              case Prim::Min: os << indent << "acc = fmin(acc, " << value << ");\n"; break;
              default: os << indent << "acc = fmax(acc, " << value << ");\n"; break;
            }
          }
          os << indent << "return acc;\n";
        } else {
          throw Error("nested functions cannot be rendered as pseudo-c");
        }
      },
      n.value);
}

}  // namespace

std::string render_sexpr(const Term& t) { return sexpr_tree(lower_binary(t)); }

std::string render_source(const FuncDef& f, Dialect dialect) {
  if (dialect == Dialect::Sexpr) return sexpr_func(f, "defun");
  const IRNode* result = f.body.get();
  while (const auto* let = std::get_if<LetBlock>(&result->value)) result = let->body.get();
  const bool array = std::holds_alternative<MakeArray>(result->value);
  if (const auto* e = std::get_if<IRExpr>(&f.body->value)) {
    return "double " + f.name + "(" + c_params(f, false) + ") { return " + c_expr(e->term) + "; }";
  }
  std::ostringstream os;
  os << (array ? "void " : "double ") << f.name << "(" << c_params(f, array) << ") {\n";
  c_body(*f.body, os, "  ");
  os << "}";
  return os.str();
}

FuncDef parse_sexpr_function(std::string_view text, const std::vector<Term>& known) {
  SexprReader reader(text);
  return SexprBuilder(known).func(reader.read_all(), "defun");
}

Term parse_sexpr(std::string_view text, const std::vector<Term>& known) {
  SexprReader reader(text);
  return SexprBuilder(known).expr(reader.read_all());
}

// ---- map-reduce --------------------------------------------------------------------------

namespace {

double tree_fold(Prim p, std::span<const double> v) {
  if (v.size() == 1) return v[0];
  const std::size_t half = v.size() / 2;
  return combine(p, tree_fold(p, v.subspan(0, half)), tree_fold(p, v.subspan(half)));
}

}  // namespace

double map_reduce_eval(const MapReduce& mr, std::span<const double> input, FoldOrder order) {
  if (!mr.reduce.valid() || !ac_reducer(mr.reduce)) {
    throw Error("map-reduce reducer must be one of + * min max, got '" + (mr.reduce.valid() ? mr.reduce.name() : "?") + "'");
  }
  if (!mr.map || mr.map->params.size() != 1) throw Error("map-reduce needs a one-parameter map function");
  const Term& body = std::get<IRExpr>(mr.map->body->value).term;
  const std::string& param = mr.map->params[0].name();
  std::vector<double> mapped;
  mapped.reserve(input.size());
  Env env;
  for (double x : input) {
    env[param] = x;
    mapped.push_back(evaluate(body, env));
  }
  const Prim p = mr.reduce.prim();
  const double init = mr.init.to_double();
  if (mapped.empty()) return init;
  if (order == FoldOrder::Tree) return combine(p, init, tree_fold(p, mapped));
  double acc = init;
  for (double v : mapped) acc = combine(p, acc, v);
  return acc;
}

}  // namespace symx

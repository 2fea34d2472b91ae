#include "symx/io.hpp"

#include "symx/error.hpp"

#include <fstream>
#include <sstream>

namespace symx {

// ---- declarations -------------------------------------------------------------------

Term Decls::declare_symbol(const std::string& name, SymType type) {
  Term s = make_symbol(name, std::move(type));
  symbols_.insert_or_assign(name, s);
  return s;
}

OpId Decls::declare_function(const std::string& name, int arity, SymType result) {
  OpId op = OpId::declare(name, arity, std::move(result));
  functions_.insert(name);
  return op;
}

std::optional<Term> Decls::symbol(std::string_view name) const {
  auto it = symbols_.find(name);
  if (it == symbols_.end()) return std::nullopt;
  return it->second;
}

std::optional<OpId> Decls::function(std::string_view name, std::size_t arity) {
  if (auto op = OpId::find(name); op && (op->prim() != Prim::User || functions_.contains(name))) return op;
  if (mode_ == Mode::Implicit) {
    if (auto op = OpId::find(name)) return op;
    return declare_function(std::string(name), static_cast<int>(arity));
  }
  return std::nullopt;
}

// ---- syntax tree to term ----------------------------------------------------------------

namespace {

OpId binary_op(const std::string& text) {
  switch (text[0]) {
    case '+': return OpId::add();
    case '-': return OpId::sub();
    case '*': return OpId::mul();
    case '/': return OpId::div();
    default: return OpId::pow();
  }
}

Term combine(OpId op, std::vector<Term> args, ParseOptions options) {
  if (options.fold) return build(op, args);
  return make_app(op, std::move(args));
}

}  // namespace

Term to_term(const SyntaxNode& node, Decls& decls, ParseOptions options) {
  using K = SyntaxNode::Kind;
  switch (node.kind) {
    case K::Number:
      try {
        return Term(Constant::parse(node.text));
      } catch (const Error& e) {
        throw ParseError(e.what(), node.line, node.column);
      }
    case K::Ident: {
      if (auto s = decls.symbol(node.text)) return *s;
      if (decls.mode() == Decls::Mode::Implicit) return decls.declare_symbol(node.text);
      throw ParseError("undeclared identifier '" + node.text + "'", node.line, node.column);
    }
    case K::Slot: throw ParseError("slot ~" + node.text + " outside a rule", node.line, node.column);
    case K::Call: {
      auto op = decls.function(node.text, node.children.size());
      if (!op) throw ParseError("undeclared function '" + node.text + "'", node.line, node.column);
      if (!op->accepts_arity(node.children.size())) {
        throw ParseError("wrong number of arguments to '" + node.text + "'", node.line, node.column);
      }
      std::vector<Term> args;
      for (const SyntaxNode& c : node.children) args.push_back(to_term(c, decls, options));
      return combine(*op, std::move(args), options);
    }
    case K::Binary: {
      std::vector<Term> args{to_term(node.children[0], decls, options), to_term(node.children[1], decls, options)};
      return combine(binary_op(node.text), std::move(args), options);
    }
    case K::Negate: {
      const SyntaxNode& inner = node.children[0];
      if (inner.kind == K::Number) return Term(-Constant::parse(inner.text));
      return combine(OpId::sub(), {to_term(inner, decls, options)}, options);
    }
  }
  return Term();
}

Term parse_expr(std::string_view text, Decls& decls, ParseOptions options) {
  return to_term(parse_syntax(text), decls, options);
}

Term parse_expr(std::string_view text) {
  Decls decls(Decls::Mode::Implicit);
  return parse_expr(text, decls);
}

// ---- printing ------------------------------------------------------------------------------

namespace {

enum Prec { kSum = 1, kProduct = 2, kUnary = 3, kPower = 4, kAtom = 5 };

struct Printed {
  std::string text;
  int prec = kAtom;
};

Printed render(const Term& t);

std::string wrap(const Printed& p, int min_prec) {
  return p.prec < min_prec ? "(" + p.text + ")" : p.text;
}

std::string wrap(const Term& t, int min_prec) { return wrap(render(t), min_prec); }

Printed render_constant(const Constant& c) {
  const std::string s = c.str();
  if (c.is_exact() && !c.is_exact_integer()) return {s, kProduct};
  return {s, c.is_negative() ? kUnary : kAtom};
}

bool is_negative_term(const Term& t) {
  if (t.is_constant()) return t.value().is_negative();
  if (t.is_mul()) return t.coeff().is_negative();
  return false;
}

Printed render_product(const Constant& coeff, std::span<const Entry> entries) {
  std::vector<std::string> num;
  std::vector<std::string> den;
  const bool negative = coeff.is_negative();
  const Constant mag = coeff.abs();
  if (mag.is_exact()) {
    const mpz_class p = mag.exact().get_num();
    const mpz_class q = mag.exact().get_den();
    if (p != 1) num.push_back(p.get_str());
    if (q != 1) den.push_back(q.get_str());
  } else {
    num.push_back(mag.str());
  }
  for (const auto& [b, e] : entries) {
    if (e.is_negative()) {
      const Constant pe = -e;
      den.push_back(wrap(pe.is_exact() && pe.is_one() ? b : pow_terms(b, Term(pe)), kUnary));
    } else {
      num.push_back(wrap(e.is_exact() && e.is_one() ? b : pow_terms(b, Term(e)), kUnary));
    }
  }
  std::string text;
  std::size_t parts = 0;
  if (num.empty()) {
    text = "1";
    parts = 1;
  }
  for (std::size_t i = 0; i < num.size(); ++i) {
    if (i > 0) text += "*";
    text += num[i];
    ++parts;
  }
  for (const std::string& d : den) {
    text += "/" + d;
    ++parts;
  }
  return {(negative ? "-" : "") + text, parts > 1 ? kProduct : kUnary};
}

Printed render_raw(const Term& t) {
  const auto args = t.args();
  Printed out;
  auto join = [&](const char* sep, int first_prec, int rest_prec) {
    std::string s = wrap(args[0], first_prec);
    for (std::size_t i = 1; i < args.size(); ++i) s += sep + wrap(args[i], rest_prec);
    return s;
  };
  switch (t.op().prim()) {
    case Prim::Add: return {join(" + ", kSum, kProduct), kSum};
    case Prim::Mul: return {join("*", kProduct, kUnary), kProduct};
    case Prim::Sub:
      if (args.size() == 1) return {"-" + wrap(args[0], kUnary), kUnary};
      return {join(" - ", kSum, kProduct), kSum};
    case Prim::Div: return {join("/", kProduct, kUnary), kProduct};
    case Prim::Pow: return {wrap(args[0], kAtom) + "^" + wrap(args[1], kPower), kPower};
    default: break;
  }
  std::string s = t.op().name() + "(";
  for (std::size_t i = 0; i < args.size(); ++i) s += (i ? ", " : "") + render(args[i]).text;
  return {s + ")", kAtom};
}

Printed render(const Term& t) {
  switch (t.kind()) {
    case Term::Kind::Constant: return render_constant(t.value());
    case Term::Kind::Symbol: return {t.name(), kAtom};
    case Term::Kind::Add: {
      const auto& args = arguments(t);
      std::string s = wrap(args[0], kSum);
      for (std::size_t i = 1; i < args.size(); ++i) {
        if (is_negative_term(args[i])) {
          const Term parts[] = {Term(-1), args[i]};
          s += " - " + wrap(mul_terms(parts), kProduct);
        } else {
          s += " + " + wrap(args[i], kProduct);
        }
      }
      return {s, kSum};
    }
    case Term::Kind::Mul: return render_product(t.coeff(), t.entries());
    case Term::Kind::Pow: {
      const Term& e = t.exponent();
      if (e.is_constant() && e.value().is_negative()) {
        const Constant pe = -e.value();
        return {"1/" + wrap(pe.is_one() && pe.is_exact() ? t.base() : pow_terms(t.base(), Term(pe)), kUnary), kProduct};
      }
      return {wrap(t.base(), kAtom) + "^" + wrap(e, kPower), kPower};
    }
    case Term::Kind::App: return render_raw(t);
  }
  return {};
}

std::size_t paren_depth_delta(std::string_view s) {
  long depth = 0;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
  }
  return depth > 0 ? static_cast<std::size_t>(depth) : 0;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

void parse_header(const std::string& line, std::size_t line_no, Decls& decls) {
  std::istringstream in(line);
  std::string keyword, item;
  in >> keyword;
  while (in >> item) {
    std::string name = item;
    SymType type = SymType::Kind::Number;
    if (auto pos = item.find("::"); pos != std::string::npos) {
      name = item.substr(0, pos);
      type = parse_symtype(item.substr(pos + 2));
    }
    if (keyword == "syms") {
      try {
        decls.declare_symbol(name, type);
      } catch (const ParseError&) {
        throw ParseError("invalid identifier '" + name + "'", line_no, 1);
      }
    } else {
      const auto slash = name.find('/');
      if (slash == std::string::npos) throw ParseError("function declaration needs name/arity", line_no, 1);
      int arity = 0;
      try {
        arity = std::stoi(name.substr(slash + 1));
      } catch (const std::exception&) {
        throw ParseError("invalid arity in '" + item + "'", line_no, 1);
      }
      decls.declare_function(name.substr(0, slash), arity, type);
    }
  }
}

}  // namespace

std::string print_expr(const Term& t) { return render(t).text; }

SourceFile parse_source(std::string_view text, ParseOptions options) {
  SourceFile file;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::string pending;
  std::size_t pending_line = 0;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (trim(pending).empty()) return;
    try {
      file.exprs.push_back(parse_expr(pending, file.decls, options));
    } catch (const ParseError& e) {
      // Re-anchor the position to the file.
      const std::string msg = e.what();
      const auto colon = msg.find(": ", msg.find(':') + 1);
      throw ParseError(colon == std::string::npos ? msg : msg.substr(colon + 2), pending_line + e.line() - 1, e.column());
    }
    pending.clear();
  };
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    const std::string stripped = trim(line);
    if (pending.empty()) {
      if (stripped.empty()) continue;
      if (stripped.rfind("syms", 0) == 0 || stripped.rfind("funcs", 0) == 0) {
        const char next = stripped.size() > 4 ? stripped[stripped.rfind("syms", 0) == 0 ? 4 : 5] : ' ';
        if (next == ' ' || next == '\t' || stripped == "syms" || stripped == "funcs") {
          parse_header(stripped, line_no, file.decls);
          continue;
        }
      }
      pending_line = line_no;
    }
    pending += line;
    pending += '\n';
    const std::string so_far = trim(pending);
    const char last = so_far.empty() ? ' ' : so_far.back();
    const bool continues = paren_depth_delta(pending) > 0 || std::string_view("+-*/^(,").find(last) != std::string_view::npos;
    if (!continues) flush();
  }
  flush();
  return file;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SourceFile load_source(const std::string& path, ParseOptions options) { return parse_source(read_file(path), options); }

}  // namespace symx

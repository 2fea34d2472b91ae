#pragma once

#include "symx/term.hpp"

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace symx {

// ---- IR ----------------------------------------------------------------------------------

struct IRNode;
using IRPtr = std::shared_ptr<const IRNode>;

/// A term whose symbols are function parameters or enclosing locals.
struct IRExpr {
  Term term;
};

struct Assignment {
  std::string target;
  IRExpr value;
};

struct LetBlock {
  std::vector<Assignment> bindings;
  IRPtr body;
};

struct MakeArray {
  std::vector<IRExpr> elements;
};

struct FuncDef;
struct MapReduce {
  std::shared_ptr<const FuncDef> map;  // one parameter, scalar body
  OpId reduce;
  Constant init;
  IRPtr over;  // a MakeArray
};

struct FuncDef {
  std::string name;
  std::vector<Term> params;
  IRPtr body;
};

struct IRNode {
  std::variant<IRExpr, Assignment, LetBlock, MakeArray, MapReduce, FuncDef> value;
};

IRPtr ir(IRExpr e);
IRPtr ir(LetBlock b);
IRPtr ir(MakeArray a);
IRPtr ir(MapReduce m);

/// A scalar body for one expression, a MakeArray otherwise.
/// Throws Error naming a free symbol that is not a parameter.
FuncDef build_function(const std::vector<Term>& exprs, const std::vector<Term>& params, std::string name = "f");

/// Checks parameter distinctness and that every symbol is bound. Throws Error.
void check_function(const FuncDef& f);

// ---- bytecode ----------------------------------------------------------------------------

enum class OpCode { PushConst, LoadArg, LoadLocal, StoreLocal, Call, MakeArray, Reduce };

struct Instr {
  OpCode code = OpCode::PushConst;
  std::size_t n = 0;  // argument or local index, arity, or element count
  double k = 0;       // constant, or REDUCE init
  OpId op;            // CALL and REDUCE
};

using RuntimeFunction = std::function<double(std::span<const double>)>;
using RuntimeBindings = std::map<std::string, RuntimeFunction, std::less<>>;

struct Bytecode {
  std::vector<Instr> code;
  std::size_t n_args = 0;
  std::size_t n_locals = 0;
  std::size_t n_outputs = 1;
  std::vector<std::string> arg_names;
  std::vector<std::string> local_names;
  RuntimeBindings runtime;  // uninterpreted functions
};

/// Integer powers with exponent in this range become multiply chains.
inline constexpr long kPowerExpansionMax = 8;

/// Throws Error for an uninterpreted function without a runtime binding.
Bytecode lower_to_bytecode(const FuncDef& f, const RuntimeBindings& runtime = {});

/// Stack-effect and local-initialization problems; empty when the code is well formed.
std::vector<std::string> verify_bytecode(const Bytecode& bc);

/// Throws Error on an argument-count mismatch. NaN and Inf propagate.
std::vector<double> exec_bytecode(const Bytecode& bc, std::span<const double> args);

std::string disassemble(const Bytecode& bc);

// ---- source rendering --------------------------------------------------------------------

enum class Dialect { PseudoC, Sexpr };

std::string render_source(const FuncDef& f, Dialect dialect);
/// Prefix form of a single expression, e.g. (+ x (* 2 y)).
std::string render_sexpr(const Term& t);

/// Parses `(defun name (params...) body)`. Symbols named in `known` keep their symtypes.
FuncDef parse_sexpr_function(std::string_view text, const std::vector<Term>& known = {});
/// Parses one body expression into a raw tree.
Term parse_sexpr(std::string_view text, const std::vector<Term>& known = {});

// ---- map-reduce --------------------------------------------------------------------------

enum class FoldOrder { Left, Tree };

/// Maps each input through mr.map and folds with mr.reduce from mr.init.
/// The reduce operator must be one of + * min max.
double map_reduce_eval(const MapReduce& mr, std::span<const double> input, FoldOrder order = FoldOrder::Left);

}  // namespace symx

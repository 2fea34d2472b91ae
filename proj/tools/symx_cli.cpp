// symx command-line driver.

#include "symx/analysis.hpp"
#include "symx/bench.hpp"
#include "symx/calculus.hpp"
#include "symx/codegen.hpp"
#include "symx/cost.hpp"
#include "symx/egraph.hpp"
#include "symx/error.hpp"
#include "symx/io.hpp"
#include "symx/rewrite.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <charconv>
#include <iostream>
#include <string>
#include <vector>

namespace {

using json = nlohmann::ordered_json;
using namespace symx;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<Term> symbols_named(const SourceFile& src, const std::string& list, const char* flag) {
  std::vector<Term> out;
  for (const std::string& name : split_list(list)) {
    auto s = src.decls.symbol(name);
    try {
      out.push_back(s ? *s : make_symbol(name));
    } catch (const Error&) {
      throw UsageError(std::string(flag) + ": '" + name + "' is not a valid symbol name");
    }
  }
  if (out.empty()) throw UsageError(std::string(flag) + " needs at least one name");
  return out;
}

Env parse_bindings(const std::string& text) {
  Env env;
  for (const std::string& item : split_list(text)) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--bind expects name=value, got '" + item + "'");
    const std::string name = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    double v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      throw UsageError("--bind: '" + value + "' is not a number");
    }
    env[name] = v;
  }
  return env;
}

SourceFile load(const std::string& path, bool fold = true) {
  SourceFile src = load_source(path, ParseOptions{fold});
  if (src.exprs.empty()) throw Error(path + ": no expressions");
  return src;
}

json optimization_report(const Term& input, const Optimization& o) {
  json counts = json::object();
  for (const auto& [name, n] : o.report.rule_application_counts) counts[name] = n;
  return json{{"input", print_expr(input)},
              {"output", print_expr(o.tree)},
              {"before_cost", o.before_cost},
              {"after_cost", o.after_cost},
              {"stop_reason", to_string(o.report.stop_reason)},
              {"iterations", o.report.iterations},
              {"enodes", o.report.enode_count},
              {"rule_applications", counts}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"symx: symbolic expressions, rewriting, equality saturation and code generation"};
  app.require_subcommand(1);

  std::string file;

  auto* parse_cmd = app.add_subcommand("parse", "Print the canonical form of each expression");
  parse_cmd->add_option("file", file, "Source file")->required();

  std::string rules_path;
  auto* simplify_cmd = app.add_subcommand("simplify", "Simplify with the default or a custom rule file");
  simplify_cmd->add_option("file", file, "Source file")->required();
  simplify_cmd->add_option("--rules", rules_path, "Rule file");

  std::string cost_path;
  std::string ruleset = "arithmetic";
  SaturationLimits limits;
  bool no_fold = false;
  bool as_json = false;
  auto* optimize_cmd = app.add_subcommand("optimize", "Equality saturation and cycle-cost extraction");
  optimize_cmd->add_option("file", file, "Source file")->required();
  optimize_cmd->add_option("--cost", cost_path, "Cost model file (key=value per line)");
  optimize_cmd->add_option("--iters", limits.max_iterations, "Iteration limit")->capture_default_str();
  optimize_cmd->add_option("--node-limit", limits.max_enodes, "E-node limit")->capture_default_str();
  optimize_cmd->add_option("--timeout", limits.timeout_ms, "Timeout in milliseconds")->capture_default_str();
  optimize_cmd->add_option("--ruleset", ruleset, "arithmetic or cycle")
      ->check(CLI::IsMember({"arithmetic", "cycle"}))
      ->capture_default_str();
  optimize_cmd->add_flag("--no-fold", no_fold, "Parse arithmetic as raw nodes without constructor folding");
  optimize_cmd->add_flag("--json", as_json, "Print a JSON report");

  std::string params;
  std::string emit;
  std::string name = "f";
  auto* codegen_cmd = app.add_subcommand("codegen", "Render or lower the expressions as one function");
  codegen_cmd->add_option("file", file, "Source file")->required();
  codegen_cmd->add_option("--params", params, "Comma-separated parameter names")->required();
  codegen_cmd->add_option("--emit", emit, "sexpr, pseudo-c or bytecode")
      ->required()
      ->check(CLI::IsMember({"sexpr", "pseudo-c", "bytecode"}));
  codegen_cmd->add_option("--name", name, "Function name")->capture_default_str();

  std::string bind;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate each expression");
  eval_cmd->add_option("file", file, "Source file")->required();
  eval_cmd->add_option("--bind", bind, "Comma-separated name=value pairs");

  std::string vars;
  bool jac_json = false;
  auto* jacobian_cmd = app.add_subcommand("jacobian", "Sparse Jacobian as (row, col, entry) triplets");
  jacobian_cmd->add_option("file", file, "Source file")->required();
  jacobian_cmd->add_option("--vars", vars, "Comma-separated variable names")->required();
  jacobian_cmd->add_flag("--json", jac_json, "Print JSON");

  std::size_t terms = 1400;
  std::uint64_t seed = 1;
  std::size_t runs = 10;
  std::size_t warmup = 3;
  bool bench_json = false;
  auto* bench_cmd = app.add_subcommand("bench", "Benchmarks");
  bench_cmd->require_subcommand(1);
  auto* construct_cmd = bench_cmd->add_subcommand("construct", "Canonical construction against rule-based simplification");
  construct_cmd->add_option("--terms", terms, "Number of terms")->capture_default_str()->check(CLI::PositiveNumber);
  construct_cmd->add_option("--seed", seed, "Generator seed")->capture_default_str();
  construct_cmd->add_option("--runs", runs, "Measured runs")->capture_default_str()->check(CLI::PositiveNumber);
  construct_cmd->add_option("--warmup", warmup, "Warmup runs")->capture_default_str();
  construct_cmd->add_flag("--json", bench_json, "Print JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*parse_cmd) {
      for (const Term& t : load(file).exprs) std::cout << print_expr(t) << "\n";
    } else if (*simplify_cmd) {
      const SourceFile src = load(file);
      const Rewriter simplifier = rules_path.empty() ? make_simplifier(default_rules())
                                                     : make_simplifier(load_rules(read_file(rules_path)));
      for (const Term& t : src.exprs) std::cout << print_expr(simplifier(t)) << "\n";
    } else if (*optimize_cmd) {
      const SourceFile src = load(file, !no_fold);
      const CostModel cm = cost_path.empty() ? CostModel::defaults() : CostModel::parse(read_file(cost_path));
      const std::vector<Rule> rules = ruleset == "cycle" ? cycle_rules() : arithmetic_rules();
      json reports = json::array();
      for (const Term& t : src.exprs) {
        const Optimization o = optimize(t, rules, cm, limits);
        if (as_json) {
          reports.push_back(optimization_report(t, o));
        } else {
          std::cout << print_expr(o.tree) << "\n";
        }
      }
      if (as_json) std::cout << (reports.size() == 1 ? reports[0] : reports).dump(2) << "\n";
    } else if (*codegen_cmd) {
      const SourceFile src = load(file);
      const FuncDef f = build_function(src.exprs, symbols_named(src, params, "--params"), name);
      if (emit == "bytecode") {
        std::cout << disassemble(lower_to_bytecode(f));
      } else {
        std::cout << render_source(f, emit == "sexpr" ? Dialect::Sexpr : Dialect::PseudoC) << "\n";
      }
    } else if (*eval_cmd) {
      const SourceFile src = load(file);
      const Env env = parse_bindings(bind);
      for (const Term& t : src.exprs) std::cout << number(evaluate(t, env)) << "\n";
    } else if (*jacobian_cmd) {
      const SourceFile src = load(file);
      const std::vector<Term> vs = symbols_named(src, vars, "--vars");
      const auto entries = sparse_jacobian(src.exprs, vs);
      if (jac_json) {
        json out{{"rows", src.exprs.size()}, {"cols", vs.size()}, {"nnz", entries.size()}, {"entries", json::array()}};
        for (const auto& e : entries) out["entries"].push_back({{"row", e.row}, {"col", e.col}, {"expr", print_expr(e.entry)}});
        std::cout << out.dump(2) << "\n";
      } else {
        for (const auto& e : entries) std::cout << e.row << " " << e.col << " " << print_expr(e.entry) << "\n";
      }
    } else if (*construct_cmd) {
      const BenchResult r = bench_construct(terms, seed, warmup, runs);
      if (bench_json) {
        json out{{"terms", terms},
                 {"seed", seed},
                 {"warmup", warmup},
                 {"runs", runs},
                 {"canonical_median_ms", r.canonical_median_ms},
                 {"rule_based_median_ms", r.baseline_median_ms},
                 {"hand_coded_median_ms", r.hand_coded_median_ms},
                 {"ratio", r.ratio},
                 {"hand_coded_ratio", r.hand_coded_ratio},
                 {"results_agree", canonicalize(r.baseline) == r.canonical}};
        std::cout << out.dump(2) << "\n";
      } else {
        std::cout << "terms " << terms << ", seed " << seed << ", median of " << runs << " runs after " << warmup
                  << " warmup\n"
                  << "canonical construction   " << number(r.canonical_median_ms) << " ms\n"
                  << "rule-based simplifier    " << number(r.baseline_median_ms) << " ms\n"
                  << "hand-coded simplifier    " << number(r.hand_coded_median_ms) << " ms\n"
                  << "ratio " << number(r.ratio) << " (hand-coded " << number(r.hand_coded_ratio) << ")\n";
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

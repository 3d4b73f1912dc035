// Copyright 2026 The Strata Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The strata command-line driver.
//
//   strata build <query> --catalog <file> -o <artifact>   compile and store
//   strata run <artifact> [-p name=value ...]             answer from storage
//   strata check <query> --catalog <file>                 staging check
//   strata eval <query> --catalog <file> [-p ...]         reference evaluation
//   strata transform <query> --catalog <file> --rule R    apply one rewrite
//   strata transform <query> --catalog <file> --script F  apply a rewrite script
//   strata verify <q1> <q2> --catalog <file>              randomized equivalence
//   strata optimize <query> --catalog <file>              pick a stored layout
//   strata explain <artifact>                             show what is inside
//
// Exit codes: 0 success; 1 runtime failure (a trap, an evaluation error, an
// inequivalence); 2 input error (unparsable query or catalog, staging
// violations, bad parameters, corrupt artifact).

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "strata/artifact.hpp"
#include "strata/catalog.hpp"
#include "strata/equiv.hpp"
#include "strata/interp.hpp"
#include "strata/ir.hpp"
#include "strata/layout_type.hpp"
#include "strata/lower.hpp"
#include "strata/optimizer.hpp"
#include "strata/parser.hpp"
#include "strata/schema.hpp"
#include "strata/serialize.hpp"
#include "strata/transform.hpp"

namespace strata {
namespace {

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kInputError = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

int input_error(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return kInputError;
}

int runtime_error_out(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return kRuntimeError;
}

// --- Parameter parsing -------------------------------------------------------

// Parses a decimal literal into a fixed-point value of the given scale.
Value parse_fixed_text(const std::string& s, int scale) {
  size_t i = 0;
  bool neg = false;
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) neg = s[i++] == '-';
  std::string digits, frac;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
    digits += s[i++];
  }
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      frac += s[i++];
    }
  }
  if (i != s.size() || (digits.empty() && frac.empty())) {
    throw Error("'" + s + "' is not a decimal number");
  }
  if (int(frac.size()) > scale) {
    throw Error("'" + s + "' has more than " + std::to_string(scale) +
                " fractional digits");
  }
  frac.resize(size_t(scale), '0');
  int64_t num = 0;
  for (char c : digits + frac) num = num * 10 + (c - '0');
  return Value::fixed(neg ? -num : num, scale);
}

// Parses `text` according to a declared parameter kind.
Value parse_value_for(ValueKind kind, int scale, const std::string& text) {
  if (text == "null") return Value::null();
  switch (kind) {
    case ValueKind::kInt:
      try {
        size_t used = 0;
        int64_t v = std::stoll(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return Value::integer(v);
      } catch (const std::exception&) {
        throw Error("'" + text + "' is not an integer");
      }
    case ValueKind::kBool:
      if (text == "true") return Value::boolean(true);
      if (text == "false") return Value::boolean(false);
      throw Error("'" + text + "' is not a boolean (use true/false)");
    case ValueKind::kString:
      return Value::string(text);
    case ValueKind::kFixed:
      return parse_fixed_text(text, scale);
    case ValueKind::kDate:
      return Value::date_from_iso(text);
    default:
      throw Error("parameter kind cannot be parsed");
  }
}

// Best-effort literal parsing when no manifest is available (eval, verify):
// null, booleans, integers, ISO dates, decimals, then plain strings.
Value parse_value_guess(const std::string& text) {
  if (text == "null") return Value::null();
  if (text == "true") return Value::boolean(true);
  if (text == "false") return Value::boolean(false);
  bool digits = !text.empty(), dot = false, dashes = false;
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (std::isdigit(static_cast<unsigned char>(c))) continue;
    if ((c == '-' || c == '+') && i == 0) continue;
    if (c == '.' && !dot) {
      dot = true;
      continue;
    }
    if (c == '-') {
      dashes = true;
      continue;
    }
    digits = false;
    break;
  }
  if (digits && dashes && !dot && text.size() == 10) {
    try {
      return Value::date_from_iso(text);
    } catch (const Error&) {
    }
  }
  if (digits && !dashes) {
    if (!dot) {
      try {
        return Value::integer(std::stoll(text));
      } catch (const std::exception&) {
      }
    } else {
      size_t at = text.find('.');
      int scale = int(text.size() - at - 1);
      try {
        return parse_fixed_text(text, scale);
      } catch (const Error&) {
      }
    }
  }
  return Value::string(text);
}

std::pair<std::string, std::string> split_binding(const std::string& s) {
  size_t eq = s.find('=');
  if (eq == std::string::npos) {
    throw Error("parameter '" + s + "' is not of the form name=value");
  }
  std::string name = s.substr(0, eq);
  if (name.empty()) throw Error("parameter '" + s + "' has an empty name");
  if (name[0] != '$') name = "$" + name;
  return {name, s.substr(eq + 1)};
}

// Binds -p arguments against an artifact manifest: every manifest parameter
// must be supplied, and nothing else.
Tuple bind_manifest_params(const std::vector<std::string>& raw,
                           const std::vector<Ident>& params,
                           const std::vector<ColumnDecl>& decls) {
  Tuple out;
  std::vector<bool> bound(params.size(), false);
  for (const std::string& s : raw) {
    auto [name, text] = split_binding(s);
    size_t i = 0;
    for (; i < params.size(); ++i) {
      if (params[i].base == name) break;
    }
    if (i == params.size()) {
      throw Error("unknown parameter " + name + " (the plan takes " +
                  (params.empty() ? std::string("none")
                                  : [&] {
                                      std::string all;
                                      for (const auto& p : params) {
                                        if (!all.empty()) all += ", ";
                                        all += p.base;
                                      }
                                      return all;
                                    }()) +
                  ")");
    }
    if (bound[i]) throw Error("parameter " + name + " bound twice");
    bound[i] = true;
    out.bind(params[i], parse_value_for(decls[i].kind, decls[i].scale, text));
  }
  for (size_t i = 0; i < params.size(); ++i) {
    if (!bound[i]) throw Error("missing parameter " + params[i].base);
  }
  return out;
}

Tuple bind_free_params(const std::vector<std::string>& raw) {
  Tuple out;
  for (const std::string& s : raw) {
    auto [name, text] = split_binding(s);
    out.bind(Ident(name), parse_value_guess(text));
  }
  return out;
}

// --- Commands ----------------------------------------------------------------

struct BuildArgs {
  std::string query_file, catalog_file, out_file, trace_file;
};

int cmd_build(const BuildArgs& a) {
  Database db;
  QueryPtr q;
  std::string trace;
  try {
    db = load_database_file(a.catalog_file);
    q = parse_query(read_file(a.query_file));
    if (!a.trace_file.empty()) trace = read_file(a.trace_file);
  } catch (const Error& e) {
    return input_error(e.what());
  }
  StagingReport sr = stage_check(q, db.catalog);
  if (!sr.serializable()) {
    std::cerr << "query is not serializable:\n" << sr.to_string();
    return kInputError;
  }
  try {
    Artifact art = build_artifact(q, db, trace);
    write_artifact_file(a.out_file, art);
    std::cout << "wrote " << a.out_file << ": " << art.data.size()
              << " data bytes\n";
    std::cout << "layout: " << layout_type_to_string(art.layout_type) << "\n";
    if (!art.params.empty()) {
      std::cout << "parameters:";
      for (size_t i = 0; i < art.params.size(); ++i) {
        std::cout << " " << art.params[i].base << ":"
                  << value_kind_name(art.param_decls[i].kind);
      }
      std::cout << "\n";
    }
  } catch (const Error& e) {
    return input_error(e.what());
  }
  return kOk;
}

struct RunArgs {
  std::string artifact_file;
  std::vector<std::string> params;
  int64_t max_steps = RunLimits{}.max_steps;
};

int cmd_run(const RunArgs& a) {
  Artifact art;
  Tuple ps;
  try {
    art = read_artifact_file(a.artifact_file);
    ps = bind_manifest_params(a.params, art.params, art.param_decls);
  } catch (const Error& e) {
    return input_error(e.what());
  }
  try {
    RunLimits limits;
    limits.max_steps = a.max_steps;
    Relation out = run_artifact(art, ps, limits);
    std::cout << to_csv(out);
  } catch (const Error& e) {
    return runtime_error_out(e.what());
  }
  return kOk;
}

struct CheckArgs {
  std::string query_file, catalog_file;
};

int cmd_check(const CheckArgs& a) {
  Catalog cat;
  QueryPtr q;
  try {
    cat = parse_catalog_file(a.catalog_file);
    q = parse_query(read_file(a.query_file));
    Schema sch = schema_of(q, cat);  // also surfaces name errors
    StagingReport sr = stage_check(q, cat);
    if (!sr.serializable()) {
      std::cerr << "query is not serializable:\n" << sr.to_string();
      return kInputError;
    }
    std::cout << "serializable; schema:";
    for (const Ident& id : sch) std::cout << " " << id.to_string();
    std::cout << "\n";
  } catch (const Error& e) {
    return input_error(e.what());
  }
  return kOk;
}

struct EvalArgs {
  std::string query_file, catalog_file;
  std::vector<std::string> params;
};

int cmd_eval(const EvalArgs& a) {
  Database db;
  QueryPtr q;
  Tuple ps;
  try {
    db = load_database_file(a.catalog_file);
    q = parse_query(read_file(a.query_file));
    ps = bind_free_params(a.params);
  } catch (const Error& e) {
    return input_error(e.what());
  }
  try {
    EvalContext ctx(db, ps);
    std::cout << to_csv(eval_query(q, ctx));
  } catch (const Error& e) {
    return runtime_error_out(e.what());
  }
  return kOk;
}

struct TransformArgs {
  std::string query_file, catalog_file, rule, path = "/", script_file, domain;
  std::optional<int> conjunct, term, side;
};

int cmd_transform(const TransformArgs& a) {
  Database db;
  QueryPtr q;
  std::vector<TraceStep> steps;
  try {
    db = load_database_file(a.catalog_file);
    q = parse_query(read_file(a.query_file));
    std::string script;
    if (!a.script_file.empty()) {
      script = read_file(a.script_file);
    } else if (!a.rule.empty()) {
      script = a.rule + " " + a.path;
      if (a.conjunct) script += " conjunct=" + std::to_string(*a.conjunct);
      if (a.term) script += " term=" + std::to_string(*a.term);
      if (a.side) script += " side=" + std::to_string(*a.side);
      if (!a.domain.empty()) script += " domain=" + a.domain;
      script += "\n";
    } else {
      throw Error("pass --rule or --script");
    }
    steps = parse_script(script);
  } catch (const Error& e) {
    return input_error(e.what());
  }
  try {
    QueryPtr out = replay_trace(q, steps, db.catalog);
    std::cout << print_query(out) << "\n";
  } catch (const Error& e) {
    return input_error(e.what());
  }
  return kOk;
}

struct VerifyArgs {
  std::string query_file, query_file2, catalog_file;
  std::vector<std::string> pools;
  int64_t trials = 64;
  uint64_t seed = 1;
  bool multiset = false;
};

int cmd_verify(const VerifyArgs& a) {
  Database db;
  QueryPtr q1, q2;
  std::vector<ParamSpec> specs;
  try {
    db = load_database_file(a.catalog_file);
    q1 = parse_query(read_file(a.query_file));
    q2 = parse_query(read_file(a.query_file2));
    std::set<Ident> params;
    for (const Ident& id : free_names(q1, db.catalog)) {
      if (id.is_param()) params.insert(id);
    }
    for (const Ident& id : free_names(q2, db.catalog)) {
      if (id.is_param()) params.insert(id);
    }
    std::map<std::string, std::vector<Value>> pools;
    for (const std::string& s : a.pools) {
      auto [name, text] = split_binding(s);
      std::vector<Value>& pool = pools[name];
      std::string cur;
      std::istringstream vs(text);
      while (std::getline(vs, cur, ',')) pool.push_back(parse_value_guess(cur));
    }
    for (const Ident& id : params) {
      ParamSpec spec;
      spec.name = id;
      auto it = pools.find(id.base);
      if (it != pools.end()) {
        spec.pool = it->second;
      } else {
        for (int64_t v = 0; v < 10; ++v) spec.pool.push_back(Value::integer(v));
        spec.pool.push_back(Value::null());
      }
      specs.push_back(std::move(spec));
    }
  } catch (const Error& e) {
    return input_error(e.what());
  }
  EquivOptions opt;
  opt.mode = a.multiset ? EqMode::kMultiset : EqMode::kSequence;
  opt.trials = size_t(a.trials);
  EquivVerdict v = check_equivalence(
      q1, q2, fixture_gen_from_db(db, std::move(specs), a.seed), opt);
  std::cout << v.to_string() << "\n";
  return v.equivalent ? kOk : kRuntimeError;
}

struct OptimizeArgs {
  std::string query_file, catalog_file, cost_file, script_out, query_out;
};

int cmd_optimize(const OptimizeArgs& a) {
  Database db;
  QueryPtr q;
  CostParams cp;
  try {
    db = load_database_file(a.catalog_file);
    q = parse_query(read_file(a.query_file));
    if (!a.cost_file.empty()) cp = parse_cost_params(read_file(a.cost_file));
  } catch (const Error& e) {
    return input_error(e.what());
  }
  OptimizeResult res = optimize(q, db, cp);
  std::cout << res.report << "\n";
  std::cout << print_query(res.query) << "\n";
  try {
    if (!a.script_out.empty()) {
      std::ofstream out(a.script_out, std::ios::trunc);
      if (!out) throw Error("cannot open " + a.script_out + " for writing");
      out << trace_to_script(res.trace);
    }
    if (!a.query_out.empty()) {
      std::ofstream out(a.query_out, std::ios::trunc);
      if (!out) throw Error("cannot open " + a.query_out + " for writing");
      out << print_query(res.query) << "\n";
    }
  } catch (const Error& e) {
    return input_error(e.what());
  }
  return kOk;
}

struct ExplainArgs {
  std::string artifact_file;
};

int cmd_explain(const ExplainArgs& a) {
  Artifact art;
  try {
    art = read_artifact_file(a.artifact_file);
  } catch (const Error& e) {
    return input_error(e.what());
  }
  std::cout << "data: " << art.data.size() << " bytes\n";
  std::cout << "layout: " << layout_type_to_string(art.layout_type) << "\n";
  std::cout << "schema:";
  for (const Ident& id : art.schema) std::cout << " " << id.to_string();
  std::cout << "\n";
  std::cout << "parameters:";
  if (art.params.empty()) std::cout << " (none)";
  for (size_t i = 0; i < art.params.size(); ++i) {
    std::cout << " " << art.params[i].base << ":"
              << value_kind_name(art.param_decls[i].kind);
    if (art.param_decls[i].kind == ValueKind::kFixed) {
      std::cout << "(" << art.param_decls[i].scale << ")";
    }
  }
  std::cout << "\n";
  std::cout << "query: " << art.query_text << "\n";
  if (!art.trace_script.empty()) {
    std::cout << "derived by:\n" << art.trace_script;
  }
  std::cout << "program:\n" << ir_to_string(art.program);
  return kOk;
}

}  // namespace
}  // namespace strata

int main(int argc, char** argv) {
  using namespace strata;

  CLI::App app{"strata: compile queries with storage layouts into "
               "self-contained artifacts"};
  app.require_subcommand(1);

  BuildArgs build_args;
  CLI::App* build = app.add_subcommand("build", "compile a query and its "
                                                "data into an artifact");
  build->add_option("query", build_args.query_file, "query file")->required();
  build->add_option("--catalog", build_args.catalog_file, "catalog file")
      ->required();
  build->add_option("-o,--output", build_args.out_file, "artifact path")
      ->required();
  build->add_option("--trace-script", build_args.trace_file,
                    "rewrite script to embed as provenance");

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "answer a stored query");
  run->add_option("artifact", run_args.artifact_file, "artifact path")
      ->required();
  run->add_option("-p,--param", run_args.params,
                  "parameter binding name=value (repeatable)");
  run->add_option("--max-steps", run_args.max_steps,
                  "abort after this many VM steps");

  CheckArgs check_args;
  CLI::App* check = app.add_subcommand("check", "staging-check a query");
  check->add_option("query", check_args.query_file, "query file")->required();
  check->add_option("--catalog", check_args.catalog_file, "catalog file")
      ->required();

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "run the reference evaluator");
  eval->add_option("query", eval_args.query_file, "query file")->required();
  eval->add_option("--catalog", eval_args.catalog_file, "catalog file")
      ->required();
  eval->add_option("-p,--param", eval_args.params,
                   "parameter binding name=value (repeatable)");

  TransformArgs tr_args;
  CLI::App* tr = app.add_subcommand("transform", "apply rewrite rules");
  tr->add_option("query", tr_args.query_file, "query file")->required();
  tr->add_option("--catalog", tr_args.catalog_file, "catalog file")
      ->required();
  tr->add_option("--rule", tr_args.rule, "rule name");
  tr->add_option("--path", tr_args.path, "target path (default /)");
  tr->add_option("--conjunct", tr_args.conjunct, "conjunct index");
  tr->add_option("--term", tr_args.term, "hoistable-term index");
  tr->add_option("--side", tr_args.side, "join side (0 or 1)");
  tr->add_option("--domain", tr_args.domain,
                 "parameter domain param:v1,v2,...");
  tr->add_option("--script", tr_args.script_file,
                 "script file of rule applications");

  VerifyArgs ver_args;
  CLI::App* ver = app.add_subcommand(
      "verify", "randomized equivalence check of two queries");
  ver->add_option("query", ver_args.query_file, "first query file")
      ->required();
  ver->add_option("query2", ver_args.query_file2, "second query file")
      ->required();
  ver->add_option("--catalog", ver_args.catalog_file, "catalog file")
      ->required();
  ver->add_option("--pool", ver_args.pools,
                  "values a parameter may take: name=v1,v2,... (repeatable)");
  ver->add_option("--trials", ver_args.trials, "number of trials");
  ver->add_option("--seed", ver_args.seed, "fixture seed");
  ver->add_flag("--multiset", ver_args.multiset,
                "compare as multisets instead of sequences");

  OptimizeArgs opt_args;
  CLI::App* opt = app.add_subcommand("optimize",
                                     "choose a storage layout for a query");
  opt->add_option("query", opt_args.query_file, "query file")->required();
  opt->add_option("--catalog", opt_args.catalog_file, "catalog file")
      ->required();
  opt->add_option("--cost-config", opt_args.cost_file,
                  "cost model configuration (key = value lines)");
  opt->add_option("--script-out", opt_args.script_out,
                  "write the rewrite trace here");
  opt->add_option("--query-out", opt_args.query_out,
                  "write the rewritten query here");

  ExplainArgs ex_args;
  CLI::App* ex = app.add_subcommand("explain", "describe an artifact");
  ex->add_option("artifact", ex_args.artifact_file, "artifact path")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kInputError;
  }

  try {
    if (*build) return cmd_build(build_args);
    if (*run) return cmd_run(run_args);
    if (*check) return cmd_check(check_args);
    if (*eval) return cmd_eval(eval_args);
    if (*tr) return cmd_transform(tr_args);
    if (*ver) return cmd_verify(ver_args);
    if (*opt) return cmd_optimize(opt_args);
    if (*ex) return cmd_explain(ex_args);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kInputError;
}

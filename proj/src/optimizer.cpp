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

#include "strata/optimizer.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "strata/layout_type.hpp"
#include "strata/parser.hpp"
#include "strata/schema.hpp"

namespace strata {
namespace {

using QK = QueryExpr::Kind;
using EK = ScalarExpr::Kind;

constexpr double kInf = std::numeric_limits<double>::infinity();

Path child_path(const Path& p, int i) {
  Path out = p;
  out.push_back(i);
  return out;
}

// --- Cost model --------------------------------------------------------------

int64_t count_at(const TypedLayout& typed, const Path& p) {
  auto it = typed.by_path.find(path_to_string(p));
  if (it == typed.by_path.end()) return 0;
  return it->second->count.hi;
}

// Estimated rows the node at `p` yields per instantiation (one probe for an
// index, the whole scan for a list).
double rows_out(const QueryPtr& q, const Path& p, const TypedLayout& typed,
                const CostParams& cp) {
  switch (q->kind) {
    case QK::kAScalar:
      return 1;
    case QK::kAEmpty:
      return 0;
    case QK::kATuple: {
      double acc = q->tuple_kind == TupleKind::kCross ? 1 : 0;
      for (size_t i = 0; i < q->children.size(); ++i) {
        double r = rows_out(q->children[i], child_path(p, int(i)), typed, cp);
        if (q->tuple_kind == TupleKind::kCross) {
          acc *= r;
        } else {
          acc += r;
        }
      }
      return acc;
    }
    case QK::kAList:
      return double(count_at(typed, p)) *
             rows_out(q->children[1], child_path(p, 1), typed, cp);
    case QK::kAHashIdx:
      return rows_out(q->children[1], child_path(p, 1), typed, cp);
    case QK::kAOrderedIdx:
      return cp.range_selectivity * double(count_at(typed, p)) *
             rows_out(q->children[1], child_path(p, 1), typed, cp);
    case QK::kSelect:
      if (has_aggregates(q->items)) return 1;
      return rows_out(q->children[0], child_path(p, 0), typed, cp);
    case QK::kFilter:
      return rows_out(q->children[0], child_path(p, 0), typed, cp);
    case QK::kDepJoin:
      return rows_out(q->children[0], child_path(p, 0), typed, cp) *
             rows_out(q->children[1], child_path(p, 1), typed, cp);
    default:
      return kInf;
  }
}

double cost_walk(const QueryPtr& q, const Path& p, const TypedLayout& typed,
                 const CostParams& cp) {
  switch (q->kind) {
    case QK::kAScalar:
      return cp.decode_step;
    case QK::kAEmpty:
      return 0;
    case QK::kATuple: {
      double acc = 0;
      for (size_t i = 0; i < q->children.size(); ++i) {
        acc += cost_walk(q->children[i], child_path(p, int(i)), typed, cp);
      }
      return acc;
    }
    case QK::kAList: {
      double n = double(count_at(typed, p));
      return cp.scan_step * n +
             n * cost_walk(q->children[1], child_path(p, 1), typed, cp);
    }
    case QK::kAHashIdx:
      return cp.hash_probe + double(q->key_exprs.size()) * cp.expr_step +
             cost_walk(q->children[1], child_path(p, 1), typed, cp);
    case QK::kAOrderedIdx: {
      double n = double(count_at(typed, p));
      return cp.search_step * std::log2(n + 2) +
             double(q->lo_exprs.size() + q->hi_exprs.size()) * cp.expr_step +
             cp.range_selectivity * n *
                 (cp.scan_step +
                  cost_walk(q->children[1], child_path(p, 1), typed, cp));
    }
    case QK::kSelect:
      return cost_walk(q->children[0], child_path(p, 0), typed, cp) +
             rows_out(q->children[0], child_path(p, 0), typed, cp) *
                 double(q->items.size()) * cp.expr_step;
    case QK::kFilter:
      return cost_walk(q->children[0], child_path(p, 0), typed, cp) +
             rows_out(q->children[0], child_path(p, 0), typed, cp) *
                 cp.expr_step;
    case QK::kDepJoin:
      return cost_walk(q->children[0], child_path(p, 0), typed, cp) +
             rows_out(q->children[0], child_path(p, 0), typed, cp) *
                 cost_walk(q->children[1], child_path(p, 1), typed, cp);
    default:
      return kInf;  // relational operator in a run-time position
  }
}

// --- Rewrite bookkeeping -----------------------------------------------------

struct Rewriter {
  QueryPtr q;
  std::vector<TraceStep> trace;
  const Catalog* cat = nullptr;

  bool apply(const std::string& rule, const Path& p, const RuleAux& aux = {}) {
    if (!rule_applicable(rule, q, p, aux, *cat)) return false;
    q = apply_rule(rule, q, p, aux, *cat);
    trace.push_back(TraceStep{rule, p, aux});
    return true;
  }
};

bool merge_pass(Rewriter& rw) {
  for (const Path& p : all_paths(rw.q)) {
    if (rw.apply("merge-filters", p)) return true;
  }
  return false;
}

void merge_fix(Rewriter& rw) {
  for (int i = 0; i < 64 && merge_pass(rw); ++i) {
  }
}

// True when `e` reads a parameter or a run-time binder: evaluating it has to
// wait for run time, so a filter on it is worth turning into an index probe.
bool reads_runtime_name(const ExprPtr& e, const QueryPtr& root,
                        const Path& p) {
  std::vector<Ident> ids;
  collect_expr_idents(e, &ids);
  std::map<std::string, Stage> stages;
  bool have_stages = false;
  for (const Ident& id : ids) {
    if (id.is_param()) return true;
    if (id.scope) {
      if (!have_stages) {
        stages = binder_stages(root, p);
        have_stages = true;
      }
      auto it = stages.find(*id.scope);
      if (it != stages.end() && it->second == Stage::kRun) return true;
    }
  }
  return false;
}

// --- Phase: hash-index introduction ------------------------------------------

bool hash_intro_pass(Rewriter& rw) {
  for (const Path& p : all_paths(rw.q)) {
    QueryPtr sub = subterm_at(rw.q, p);
    if (sub->kind != QK::kFilter) continue;
    if (context_stage(rw.q, p) != Stage::kRun) continue;
    std::vector<ExprPtr> cs = conjuncts_of(sub->pred);
    for (int i = 0; i < int(cs.size()); ++i) {
      RuleAux probe;
      probe.conjunct = i;
      if (!rule_applicable("elim-eq-filter", rw.q, p, probe, *rw.cat)) {
        continue;
      }
      if (!reads_runtime_name(cs[i], rw.q, p)) continue;

      Rewriter scratch = rw;
      Path fp = p;
      int pick = i;
      if (cs.size() > 1) {
        RuleAux sp;
        sp.conjunct = i;
        if (!scratch.apply("split-filter", p, sp)) continue;
        fp = child_path(p, 0);
        pick = 0;
      }
      RuleAux ea;
      ea.conjunct = pick;
      if (!scratch.apply("elim-eq-filter", fp, ea)) continue;
      // The new index's value side is a filter over the partitioned input;
      // store it.
      scratch.apply("precompute-static", child_path(fp, 1));
      rw = std::move(scratch);
      return true;
    }
  }
  return false;
}

// --- Phase: ordered-index introduction ---------------------------------------

// lhs <= rhs, normalizing >=.
std::pair<ExprPtr, ExprPtr> as_le(const ExprPtr& e) {
  if (e->kind == EK::kBinop) {
    if (e->op == BinOp::kLe) return {e->a, e->b};
    if (e->op == BinOp::kGe) return {e->b, e->a};
  }
  return {nullptr, nullptr};
}

bool reads_only_schema(const ExprPtr& e, const std::set<Ident>& sch,
                       const Catalog& cat) {
  if (contains_aggregate(e)) return false;
  std::set<Ident> frees = free_names(e, cat);
  if (frees.empty()) return false;
  for (const Ident& n : frees) {
    if (n.is_param() || n.qualified() || !sch.count(n)) return false;
  }
  return true;
}

bool avoids_schema(const ExprPtr& e, const std::set<Ident>& sch,
                   const Catalog& cat) {
  for (const Ident& n : free_names(e, cat)) {
    if (!n.qualified() && !n.is_param() && sch.count(n)) return false;
  }
  return true;
}

bool ordered_intro_pass(Rewriter& rw) {
  for (const Path& p : all_paths(rw.q)) {
    QueryPtr sub = subterm_at(rw.q, p);
    if (sub->kind != QK::kFilter) continue;
    if (context_stage(rw.q, p) != Stage::kRun) continue;
    std::vector<ExprPtr> cs = conjuncts_of(sub->pred);
    if (cs.size() < 2) continue;
    Schema s0 = schema_of(sub->children[0], *rw.cat);
    std::set<Ident> sch(s0.begin(), s0.end());

    for (int i = 0; i < int(cs.size()); ++i) {
      auto [lo, key] = as_le(cs[i]);
      if (!lo || !reads_only_schema(key, sch, *rw.cat) ||
          !avoids_schema(lo, sch, *rw.cat)) {
        continue;
      }
      for (int j = 0; j < int(cs.size()); ++j) {
        if (j == i) continue;
        auto [key2, hi] = as_le(cs[j]);
        if (!key2 || print_expr(key2) != print_expr(key) ||
            !avoids_schema(hi, sch, *rw.cat)) {
          continue;
        }
        if (!reads_runtime_name(cs[i], rw.q, p) &&
            !reads_runtime_name(cs[j], rw.q, p)) {
          continue;
        }

        Rewriter scratch = rw;
        Path fp = p;
        if (cs.size() > 2) {
          // Move the two range conjuncts into their own filter, then fuse
          // them so elim-range-filter sees the pair alone.
          RuleAux s1;
          s1.conjunct = i;
          if (!scratch.apply("split-filter", p, s1)) continue;
          RuleAux s2;
          s2.conjunct = j - (j > i ? 1 : 0);
          if (!scratch.apply("split-filter", p, s2)) continue;
          if (!scratch.apply("merge-filters", child_path(p, 0))) continue;
          fp = child_path(p, 0);
        }
        if (!scratch.apply("elim-range-filter", fp)) continue;
        scratch.apply("precompute-static", child_path(fp, 1));
        rw = std::move(scratch);
        return true;
      }
    }
  }
  return false;
}

// --- Phase: materialization --------------------------------------------------

bool materialize_pass(Rewriter& rw) {
  for (const Path& p : all_paths(rw.q)) {
    QueryPtr sub = subterm_at(rw.q, p);
    if (sub->is_layout_op()) continue;
    if (context_stage(rw.q, p) != Stage::kRun) continue;
    if (rw.apply("precompute-static", p)) return true;
  }
  return false;
}

void materialize_fix(Rewriter& rw) {
  for (int i = 0; i < 64 && materialize_pass(rw); ++i) {
  }
}

// --- Phase: join conversion --------------------------------------------------

const char* const kJoinRules[] = {"join-to-nested", "join-to-hash",
                                  "join-to-pairs"};

// Deepest run-time join, if any (ties to the first in preorder).
std::optional<Path> deepest_join(const QueryPtr& q) {
  std::optional<Path> best;
  for (const Path& p : all_paths(q)) {
    if (subterm_at(q, p)->kind != QK::kJoin) continue;
    if (context_stage(q, p) != Stage::kRun) continue;
    if (!best || p.size() > best->size()) best = p;
  }
  return best;
}

void hash_fix(Rewriter& rw) {
  for (int i = 0; i < 32 && hash_intro_pass(rw); ++i) {
  }
}

void ordered_fix(Rewriter& rw) {
  for (int i = 0; i < 32 && ordered_intro_pass(rw); ++i) {
  }
}

// Converts any remaining joins with the first applicable rule, then runs the
// index and materialization phases.  Used to finish a candidate so its cost
// reflects a complete plan.
void finish_tail(Rewriter& rw) {
  for (int guard = 0; guard < 16; ++guard) {
    std::optional<Path> jp = deepest_join(rw.q);
    if (!jp) break;
    bool did = false;
    for (const char* rule : kJoinRules) {
      if (rw.apply(rule, *jp)) {
        did = true;
        break;
      }
    }
    if (!did) break;  // an inconvertible join; the plan will cost infinity
  }
  merge_fix(rw);
  hash_fix(rw);
  ordered_fix(rw);
  materialize_fix(rw);
}

// Converts each run-time join, innermost first, picking the rule whose
// finished plan costs least over the sample.
void convert_joins(Rewriter& rw, const Database& sample,
                   const CostParams& cp) {
  for (int guard = 0; guard < 16; ++guard) {
    std::optional<Path> jp = deepest_join(rw.q);
    if (!jp) return;
    const char* best_rule = nullptr;
    double best_cost = kInf;
    Rewriter best;
    for (const char* rule : kJoinRules) {
      Rewriter cand = rw;
      if (!cand.apply(rule, *jp)) continue;
      Rewriter finished = cand;
      finish_tail(finished);
      double c = estimate_cost(finished.q, sample, cp);
      if (!best_rule || c < best_cost) {
        best_rule = rule;
        best_cost = c;
        best = std::move(cand);
      }
    }
    if (!best_rule) return;  // nothing applies; leave the join in place
    rw = std::move(best);
  }
}

// --- Reporting ---------------------------------------------------------------

std::string cost_text(double c) {
  if (c == kInf) return "unserializable";
  std::ostringstream os;
  os << c;
  return os.str();
}

std::string build_report(const Rewriter& rw, double cost, double baseline,
                         const Catalog& cat) {
  std::map<std::string, int> by_rule;
  for (const TraceStep& s : rw.trace) ++by_rule[s.rule];
  std::ostringstream os;
  os << "rewrites applied: " << rw.trace.size();
  for (const auto& [rule, n] : by_rule) os << "\n  " << rule << ": " << n;
  os << "\nestimated cost: " << cost_text(cost)
     << " (materialize-only baseline: " << cost_text(baseline) << ")";
  StagingReport sr = stage_check(rw.q, cat);
  os << "\nserializable: " << (sr.serializable() ? "yes" : "no");
  return os.str();
}

}  // namespace

// --- Cost entry points -------------------------------------------------------

double estimate_cost(const QueryPtr& q, const Database& sample,
                     const CostParams& params) {
  try {
    if (!stage_check(q, sample.catalog).serializable()) return kInf;
    TypedLayout typed = infer_type(q, sample);
    if (total_interval(typed.root).hi > params.max_blob_bytes) return kInf;
    return cost_walk(q, Path{}, typed, params);
  } catch (const Error&) {
    return kInf;
  }
}

CostParams parse_cost_params(const std::string& text) {
  CostParams cp;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error("cost config line " + std::to_string(lineno) +
                  ": expected key = value");
    }
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    try {
      if (key == "sample_rows") {
        cp.sample_rows = std::stoll(val);
      } else if (key == "scan_step") {
        cp.scan_step = std::stod(val);
      } else if (key == "decode_step") {
        cp.decode_step = std::stod(val);
      } else if (key == "expr_step") {
        cp.expr_step = std::stod(val);
      } else if (key == "hash_probe") {
        cp.hash_probe = std::stod(val);
      } else if (key == "search_step") {
        cp.search_step = std::stod(val);
      } else if (key == "range_selectivity") {
        cp.range_selectivity = std::stod(val);
      } else if (key == "max_blob_bytes") {
        cp.max_blob_bytes = std::stoll(val);
      } else {
        throw Error("cost config line " + std::to_string(lineno) +
                    ": unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw Error("cost config line " + std::to_string(lineno) +
                  ": bad number '" + val + "'");
    }
  }
  return cp;
}

// --- Trace scripts -----------------------------------------------------------

std::string trace_to_script(const std::vector<TraceStep>& trace) {
  std::ostringstream os;
  for (const TraceStep& s : trace) {
    os << s.rule << " " << path_to_string(s.path);
    if (s.aux.conjunct) os << " conjunct=" << *s.aux.conjunct;
    if (s.aux.term) os << " term=" << *s.aux.term;
    if (s.aux.side) os << " side=" << *s.aux.side;
    if (s.aux.domain) {
      os << " domain=" << s.aux.domain->parameter.to_string() << ":";
      for (size_t i = 0; i < s.aux.domain->values.size(); ++i) {
        if (i) os << ",";
        os << print_expr(e_const(s.aux.domain->values[i]));
      }
    }
    os << "\n";
  }
  return os.str();
}

namespace {

// Splits on commas that are not inside a double-quoted literal.
std::vector<std::string> split_values(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  bool in_str = false;
  for (size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (in_str) {
      cur += c;
      if (c == '\\' && i + 1 < s.size()) {
        cur += s[++i];
      } else if (c == '"') {
        in_str = false;
      }
    } else if (c == '"') {
      cur += c;
      in_str = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<TraceStep> parse_script(const std::string& text) {
  std::vector<TraceStep> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok;
    std::vector<std::string> toks;
    while (ls >> tok) toks.push_back(tok);
    if (toks.empty() || toks[0][0] == '#') continue;
    if (toks.size() < 2) {
      throw Error("script line " + std::to_string(lineno) +
                  ": expected 'rule path ...'");
    }
    TraceStep step;
    step.rule = toks[0];
    step.path = parse_path(toks[1]);
    for (size_t i = 2; i < toks.size(); ++i) {
      size_t eq = toks[i].find('=');
      if (eq == std::string::npos) {
        throw Error("script line " + std::to_string(lineno) +
                    ": expected key=value, got '" + toks[i] + "'");
      }
      std::string key = toks[i].substr(0, eq);
      std::string val = toks[i].substr(eq + 1);
      if (key == "conjunct") {
        step.aux.conjunct = std::stoi(val);
      } else if (key == "term") {
        step.aux.term = std::stoi(val);
      } else if (key == "side") {
        step.aux.side = std::stoi(val);
      } else if (key == "domain") {
        size_t colon = val.find(':');
        if (colon == std::string::npos) {
          throw Error("script line " + std::to_string(lineno) +
                      ": domain expects param:v1,v2,...");
        }
        ParamDomain dom;
        dom.parameter = Ident(val.substr(0, colon));
        for (const std::string& v : split_values(val.substr(colon + 1))) {
          ExprPtr e = parse_expr(v);
          if (e->kind != ScalarExpr::Kind::kConst) {
            throw Error("script line " + std::to_string(lineno) +
                        ": domain value '" + v + "' is not a literal");
          }
          dom.values.push_back(e->value);
        }
        step.aux.domain = std::move(dom);
      } else {
        throw Error("script line " + std::to_string(lineno) +
                    ": unknown key '" + key + "'");
      }
    }
    out.push_back(std::move(step));
  }
  return out;
}

QueryPtr replay_trace(const QueryPtr& q, const std::vector<TraceStep>& trace,
                      const Catalog& cat) {
  QueryPtr cur = q;
  for (size_t i = 0; i < trace.size(); ++i) {
    const TraceStep& s = trace[i];
    try {
      cur = apply_rule(s.rule, cur, s.path, s.aux, cat);
    } catch (const Error& e) {
      throw Error("step " + std::to_string(i + 1) + " (" + s.rule + " at " +
                  path_to_string(s.path) + "): " + e.what());
    }
  }
  return cur;
}

// --- Optimization entry points -----------------------------------------------

OptimizeResult materialize_only(const QueryPtr& q, const Database& db,
                                const CostParams& params) {
  Database sample = sample_database(db, size_t(params.sample_rows));
  Rewriter rw{q, {}, &db.catalog};
  merge_fix(rw);
  materialize_fix(rw);
  OptimizeResult out;
  out.query = rw.q;
  out.trace = std::move(rw.trace);
  out.cost = estimate_cost(out.query, sample, params);
  out.baseline_cost = out.cost;
  Rewriter done{out.query, {}, &db.catalog};
  done.trace = out.trace;
  out.report = build_report(done, out.cost, out.baseline_cost, db.catalog);
  return out;
}

OptimizeResult optimize(const QueryPtr& q, const Database& db,
                        const CostParams& params) {
  Database sample = sample_database(db, size_t(params.sample_rows));
  OptimizeResult base = materialize_only(q, db, params);

  Rewriter rw{q, {}, &db.catalog};
  merge_fix(rw);
  convert_joins(rw, sample, params);
  finish_tail(rw);
  double cost = estimate_cost(rw.q, sample, params);

  OptimizeResult out;
  if (cost <= base.cost) {
    out.query = rw.q;
    out.trace = rw.trace;
    out.cost = cost;
  } else {
    out.query = base.query;
    out.trace = base.trace;
    out.cost = base.cost;
  }
  out.baseline_cost = base.cost;
  Rewriter done{out.query, out.trace, &db.catalog};
  out.report = build_report(done, out.cost, out.baseline_cost, db.catalog);
  return out;
}

}  // namespace strata

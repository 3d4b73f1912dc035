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

#include "strata/transform.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "strata/schema.hpp"

namespace strata {

std::pair<QueryContext, QueryPtr> split_context(const QueryPtr& q,
                                                const Path& path) {
  QueryPtr sub = subterm_at(q, path);  // validates the path
  return {QueryContext{q, path}, sub};
}

PartitionResult partition(const QueryPtr& q, const ExprPtr& e,
                          const std::string& scope,
                          const std::string& key_name) {
  std::vector<Ident> ids;
  collect_expr_idents(e, &ids);
  for (const auto& id : ids) {
    if (id.is_param()) {
      throw Error("partition expression references parameter " +
                  id.to_string() + "; partitions are enumerated before "
                  "parameters have values");
    }
  }
  QueryPtr keys = q_dedup(q_select({{key_name, e}}, q));
  QueryPtr values = q_filter(e_eq(e_name(scope, key_name), e), q);
  return {std::move(keys), std::move(values), key_name};
}

PartitionResult partition(const QueryPtr& q, const ExprPtr& e,
                          const std::string& scope) {
  std::string key_name;
  if (e->kind == ScalarExpr::Kind::kName && !e->name.qualified()) {
    key_name = e->name.base;
  } else {
    key_name = FreshGen(q).fresh();
  }
  return partition(q, e, scope, key_name);
}

namespace {

using Kind = QueryExpr::Kind;

// Everything a rule needs to look at: the whole program, the focus path, the
// subterm there, and a fresh-name source seeded past every name in the
// program.
struct RuleCtx {
  const QueryPtr& root;
  const Path& path;
  QueryPtr sub;
  const Catalog& cat;
  FreshGen fresh;
  std::map<std::string, Stage> binders;  // binders visible at `path`
};

// A rule either produces the rewritten whole program or explains itself.
struct RuleOut {
  QueryPtr program;
  std::string reason;

  static RuleOut ok(QueryPtr p) { return {std::move(p), {}}; }
  static RuleOut no(std::string why) { return {nullptr, std::move(why)}; }
};

using RuleFn = RuleOut (*)(RuleCtx&, const RuleAux&);

bool has_subquery(const ExprPtr& e) {
  std::vector<QueryPtr> qs;
  collect_expr_subqueries(e, &qs);
  return !qs.empty();
}

std::set<Ident> schema_ident_set(const QueryPtr& q, const Catalog& cat) {
  Schema s = schema_of(q, cat);
  return std::set<Ident>(s.begin(), s.end());
}

// Description of the first free name that would only be available at run
// time in this position: a parameter, or a reference to a binder that binds
// at run time.  Empty when the whole set is compile-time available.
std::optional<std::string> runtime_bound_name(const std::set<Ident>& frees,
                                              const RuleCtx& c) {
  for (const auto& id : frees) {
    if (id.is_param()) return "parameter " + id.to_string();
    if (id.scope) {
      auto it = c.binders.find(*id.scope);
      if (it == c.binders.end()) {
        return "reference " + id.to_string() + " to an unknown scope";
      }
      if (it->second == Stage::kRun) {
        return "reference " + id.to_string() + " to a run-time binder";
      }
    }
  }
  return std::nullopt;
}

// Simultaneous substitution of plain names.  Only safe on predicates without
// subqueries; callers check.
ExprPtr subst_simul(const ExprPtr& e, const std::map<Ident, ExprPtr>& m) {
  if (!e) return e;
  if (e->kind == ScalarExpr::Kind::kName) {
    auto it = m.find(e->name);
    return it == m.end() ? e : it->second;
  }
  ScalarExpr n = *e;
  n.a = subst_simul(e->a, m);
  n.b = subst_simul(e->b, m);
  n.c = subst_simul(e->c, m);
  return std::make_shared<const ScalarExpr>(std::move(n));
}

bool references_scope(const ExprPtr& e, const std::string& scope,
                      const Catalog& cat) {
  for (const auto& id : free_names(e, cat)) {
    if (id.scope && *id.scope == scope) return true;
  }
  return false;
}

// One ascalar per field, reading the field back through `scope`.
std::vector<QueryPtr> scalars_of(const Schema& fields,
                                 const std::string& scope) {
  std::vector<QueryPtr> out;
  out.reserve(fields.size());
  for (const auto& f : fields) {
    out.push_back(q_ascalar({f.base, e_name(scope, f.base)}));
  }
  return out;
}

// Pass-through select items for `fields`, optionally reading them through a
// binder scope.
std::vector<NamedExpr> passthrough_items(const Schema& fields,
                                         const std::string& scope = "") {
  std::vector<NamedExpr> out;
  out.reserve(fields.size());
  for (const auto& f : fields) {
    out.push_back(
        {f.base, scope.empty() ? e_name(f.base) : e_name(scope, f.base)});
  }
  return out;
}

bool schemas_overlap(const Schema& a, const Schema& b) {
  std::set<Ident> sa(a.begin(), a.end());
  return std::any_of(b.begin(), b.end(),
                     [&](const Ident& id) { return sa.count(id) != 0; });
}

// --- Relational rules --------------------------------------------------------

RuleOut rule_merge_filters(RuleCtx& c, const RuleAux&) {
  if (c.sub->kind != Kind::kFilter) return RuleOut::no("expected a filter");
  const QueryPtr& inner = c.sub->children[0];
  if (inner->kind != Kind::kFilter) {
    return RuleOut::no("the filter's input is not a filter");
  }
  QueryPtr out = q_filter(e_and(c.sub->pred, inner->pred), inner->children[0]);
  return RuleOut::ok(replace_at(c.root, c.path, out));
}

RuleOut rule_split_filter(RuleCtx& c, const RuleAux& aux) {
  if (c.sub->kind != Kind::kFilter) return RuleOut::no("expected a filter");
  std::vector<ExprPtr> cs = conjuncts_of(c.sub->pred);
  if (cs.size() < 2) return RuleOut::no("the predicate has a single conjunct");
  int pick = aux.conjunct.value_or(0);
  if (pick < 0 || pick >= static_cast<int>(cs.size())) {
    return RuleOut::no("conjunct index out of range");
  }
  std::vector<ExprPtr> rest;
  for (int i = 0; i < static_cast<int>(cs.size()); ++i) {
    if (i != pick) rest.push_back(cs[i]);
  }
  // The chosen conjunct moves inward so an index rule can consume it next.
  QueryPtr out =
      q_filter(and_all(rest), q_filter(cs[pick], c.sub->children[0]));
  return RuleOut::ok(replace_at(c.root, c.path, out));
}

// Applied at a filter node, rewrites the *parent* so the filter sits above
// it.  Filtering commutes with every operator handled here: the survivors of
// the predicate are the same rows in the same relative order on both sides.
RuleOut rule_hoist_filter(RuleCtx& c, const RuleAux&) {
  if (c.sub->kind != Kind::kFilter) return RuleOut::no("expected a filter");
  if (c.path.empty()) return RuleOut::no("the root has nothing to hoist above");
  ExprPtr p = c.sub->pred;
  QueryPtr q0 = c.sub->children[0];
  if (has_subquery(p)) {
    return RuleOut::no("predicates containing subqueries are not moved");
  }
  Path ppath(c.path.begin(), c.path.end() - 1);
  QueryPtr parent = subterm_at(c.root, ppath);
  int slot = c.path.back();
  QueryPtr out;
  switch (parent->kind) {
    case Kind::kSelect: {
      if (has_aggregates(parent->items)) {
        return RuleOut::no("cannot hoist above an aggregating select");
      }
      // Rewrite the predicate in terms of the select's output names; every
      // name it reads must be re-exported by a pass-through item.
      std::map<Ident, ExprPtr> rename;
      for (const auto& n : free_names(p, c.cat)) {
        if (n.is_param()) continue;
        bool found = false;
        for (const auto& it : parent->items) {
          if (it.expr->kind == ScalarExpr::Kind::kName && it.expr->name == n) {
            rename[n] = e_name(it.name);
            found = true;
            break;
          }
        }
        if (!found) {
          return RuleOut::no("the select does not re-export " + n.to_string());
        }
      }
      out = q_filter(subst_simul(p, rename),
                     q_select(parent->items, q0));
      break;
    }
    case Kind::kFilter:
      out = q_filter(p, q_filter(parent->pred, q0));
      break;
    case Kind::kJoin:
      out = slot == 0
                ? q_filter(p, q_join(parent->pred, q0, parent->children[1]))
                : q_filter(p, q_join(parent->pred, parent->children[0], q0));
      break;
    case Kind::kDedup:
      // Sound because the predicate is a pure function of the row: every
      // duplicate of a row passes or fails together, so first occurrences
      // are preserved.
      out = q_filter(p, q_dedup(q0));
      break;
    case Kind::kOrderBy:
      out = q_filter(p, q_orderby(parent->sort_keys, q0));
      break;
    case Kind::kDepJoin:
    case Kind::kAList:
    case Kind::kAHashIdx:
    case Kind::kAOrderedIdx: {
      if (slot != 1) {
        return RuleOut::no("cannot hoist a filter out of a binder's key side");
      }
      if (references_scope(p, parent->scope, c.cat)) {
        return RuleOut::no("the predicate reads binder " + parent->scope);
      }
      out = q_filter(p, with_children(parent, {parent->children[0], q0}));
      break;
    }
    default:
      return RuleOut::no(std::string("cannot hoist a filter above ") +
                         query_kind_name(parent->kind));
  }
  return RuleOut::ok(replace_at(c.root, ppath, out));
}

RuleOut rule_push_filter(RuleCtx& c, const RuleAux& aux) {
  if (c.sub->kind != Kind::kFilter) return RuleOut::no("expected a filter");
  ExprPtr p = c.sub->pred;
  QueryPtr x = c.sub->children[0];
  if (has_subquery(p)) {
    return RuleOut::no("predicates containing subqueries are not moved");
  }
  QueryPtr out;
  switch (x->kind) {
    case Kind::kSelect: {
      if (has_aggregates(x->items)) {
        return RuleOut::no("cannot push below an aggregating select");
      }
      std::map<Ident, ExprPtr> defs;
      for (const auto& it : x->items) defs[Ident(it.name)] = it.expr;
      out = q_select(x->items, q_filter(subst_simul(p, defs), x->children[0]));
      break;
    }
    case Kind::kFilter:
      out = q_filter(x->pred, q_filter(p, x->children[0]));
      break;
    case Kind::kJoin: {
      std::set<Ident> ls = schema_ident_set(x->children[0], c.cat);
      std::set<Ident> rs = schema_ident_set(x->children[1], c.cat);
      bool needs_left = false, needs_right = false;
      for (const auto& n : free_names(p, c.cat)) {
        if (n.is_param() || n.qualified()) continue;
        if (ls.count(n)) needs_left = true;
        if (rs.count(n)) needs_right = true;
      }
      if (needs_left && needs_right) {
        return RuleOut::no("the predicate reads both sides of the join");
      }
      int side = aux.side.value_or(needs_right ? 1 : 0);
      if ((side == 0 && needs_right) || (side == 1 && needs_left)) {
        return RuleOut::no("the predicate reads the other side of the join");
      }
      if (side != 0 && side != 1) return RuleOut::no("side must be 0 or 1");
      out = side == 0 ? q_join(x->pred, q_filter(p, x->children[0]),
                               x->children[1])
                      : q_join(x->pred, x->children[0],
                               q_filter(p, x->children[1]));
      break;
    }
    case Kind::kDedup:
      out = q_dedup(q_filter(p, x->children[0]));
      break;
    case Kind::kOrderBy:
      out = q_orderby(x->sort_keys, q_filter(p, x->children[0]));
      break;
    case Kind::kDepJoin:
    case Kind::kAList:
    case Kind::kAHashIdx:
    case Kind::kAOrderedIdx:
      // Scope capture is impossible: scope names are unique in a well-formed
      // program, so the predicate cannot accidentally pick up this binder.
      out = with_children(x, {x->children[0], q_filter(p, x->children[1])});
      break;
    default:
      return RuleOut::no(std::string("cannot push a filter below ") +
                         query_kind_name(x->kind));
  }
  return RuleOut::ok(replace_at(c.root, c.path, out));
}

RuleOut rule_commute_join(RuleCtx& c, const RuleAux&) {
  if (c.sub->kind != Kind::kJoin) return RuleOut::no("expected a join");
  QueryPtr out = q_join(c.sub->pred, c.sub->children[1], c.sub->children[0]);
  return RuleOut::ok(replace_at(c.root, c.path, out));
}

// --- Projection --------------------------------------------------------------

// True when the node always produces exactly one row, so a cross tuple can
// drop it without changing the row count.
bool singleton_shaped(const QueryPtr& q) {
  if (q->kind == Kind::kAScalar) return true;
  if (q->kind == Kind::kATuple && q->tuple_kind == TupleKind::kCross) {
    return std::all_of(q->children.begin(), q->children.end(),
                       singleton_shaped);
  }
  return false;
}

void collect_reads_outside(const QueryPtr& q, const Path& skip, Path* cur,
                           std::vector<Ident>* out) {
  if (*cur == skip) return;
  collect_node_idents(*q, out);
  for (int i = 0; i < static_cast<int>(q->children.size()); ++i) {
    cur->push_back(i);
    collect_reads_outside(q->children[i], skip, cur, out);
    cur->pop_back();
  }
}

RuleOut rule_project(RuleCtx& c, const RuleAux&) {
  if (c.sub->kind != Kind::kATuple && c.sub->kind != Kind::kSelect &&
      c.sub->kind != Kind::kGroupBy) {
    return RuleOut::no("project applies to atuple, select, or groupby");
  }
  if (c.sub->kind == Kind::kATuple &&
      c.sub->tuple_kind != TupleKind::kCross) {
    return RuleOut::no("concat arms must keep their schemas aligned");
  }

  // A field is needed if it reaches the program's output or is read anywhere
  // outside the focus subterm.  When the focus sits inside a binder's key
  // side, reads through that binder's scope count with the scope stripped,
  // since they name the key query's own fields.
  std::set<Ident> needed;
  {
    Schema out_schema = schema_of(c.root, c.cat);
    needed.insert(out_schema.begin(), out_schema.end());
    std::set<std::string> descope;
    QueryPtr cur = c.root;
    for (int step : c.path) {
      if (cur->binds_scope() && step == 0) descope.insert(cur->scope);
      cur = cur->children[step];
    }
    std::vector<Ident> reads;
    Path walk;
    collect_reads_outside(c.root, c.path, &walk, &reads);
    for (const auto& id : reads) {
      needed.insert(id);
      if (id.scope && descope.count(*id.scope)) needed.insert(Ident(id.base));
    }
  }
  auto is_needed = [&](const Ident& id) { return needed.count(id) != 0; };

  QueryPtr out;
  if (c.sub->kind == Kind::kATuple) {
    std::vector<QueryPtr> kept;
    for (const auto& child : c.sub->children) {
      Schema s = schema_of(child, c.cat);
      bool used = std::any_of(s.begin(), s.end(), is_needed);
      // Dropping a multi-row component would change the cross product's row
      // count even if nobody reads its fields.
      if (used || !singleton_shaped(child)) kept.push_back(child);
    }
    if (kept.size() == c.sub->children.size()) {
      return RuleOut::no("every component is needed");
    }
    if (kept.empty()) return RuleOut::no("would drop every component");
    out = q_atuple(std::move(kept), TupleKind::kCross);
  } else {
    std::vector<NamedExpr> kept;
    for (const auto& it : c.sub->items) {
      if (is_needed(Ident(it.name))) kept.push_back(it);
    }
    if (kept.size() == c.sub->items.size()) {
      return RuleOut::no("every output is needed");
    }
    if (kept.empty()) return RuleOut::no("would drop every output");
    out = c.sub->kind == Kind::kSelect
              ? q_select(std::move(kept), c.sub->children[0])
              : q_groupby(std::move(kept), c.sub->keys, c.sub->children[0]);
  }
  return RuleOut::ok(replace_at(c.root, c.path, out));
}

// --- Precomputation ----------------------------------------------------------

RuleOut rule_precompute_static(RuleCtx& c, const RuleAux&) {
  if (c.sub->is_layout_op()) return RuleOut::no("already a layout");
  std::set<Ident> frees = free_names(c.sub, c.cat);
  if (auto why = runtime_bound_name(frees, c)) {
    return RuleOut::no("not compile-time evaluable: " + *why);
  }
  Schema sch = schema_of(c.sub, c.cat);
  if (sch.empty()) return RuleOut::no("the subterm has an empty schema");
  std::set<Ident> seen;
  for (const auto& f : sch) {
    if (f.qualified()) return RuleOut::no("schema has qualified field names");
    if (!seen.insert(f).second) {
      return RuleOut::no("schema has duplicate field names");
    }
  }
  std::string x = c.fresh.fresh();
  QueryPtr out = q_alist(c.sub, x, q_atuple(scalars_of(sch, x),
                                            TupleKind::kCross));
  return RuleOut::ok(replace_at(c.root, c.path, out));
}

RuleOut rule_hoist_static_from_filter(RuleCtx& c, const RuleAux& aux) {
  if (c.sub->kind != Kind::kFilter) return RuleOut::no("expected a filter");
  ExprPtr e = c.sub->pred;
  QueryPtr q0 = c.sub->children[0];
  std::set<Ident> sch = schema_ident_set(q0, c.cat);

  // Hoistable subterms of the predicate, in preorder.  A candidate reads at
  // least one name, nothing from the filtered rows, and nothing that only
  // exists at run time; subqueries are treated as atoms.
  std::vector<ExprPtr> candidates;
  std::function<void(const ExprPtr&)> visit = [&](const ExprPtr& t) {
    if (!t) return;
    std::set<Ident> frees = free_names(t, c.cat);
    bool eligible = !frees.empty() && !contains_aggregate(t);
    if (eligible && runtime_bound_name(frees, c)) eligible = false;
    if (eligible) {
      for (const auto& n : frees) {
        if (!n.qualified() && sch.count(n)) {
          eligible = false;
          break;
        }
      }
    }
    if (eligible) candidates.push_back(t);
    if (t->kind == ScalarExpr::Kind::kExists ||
        t->kind == ScalarExpr::Kind::kFirst) {
      return;
    }
    visit(t->a);
    visit(t->b);
    visit(t->c);
  };
  visit(e);

  if (candidates.empty()) {
    return RuleOut::no(
        "no hoistable subterm (needs names, none from the filtered input, "
        "all available at compile time)");
  }
  int pick = aux.term.value_or(0);
  if (pick < 0 || pick >= static_cast<int>(candidates.size())) {
    return RuleOut::no("term index out of range");
  }
  ExprPtr hoisted = candidates[pick];
  std::string y = c.fresh.fresh();
  std::string x = c.fresh.fresh();
  QueryPtr out = q_depjoin(
      q_ascalar({y, hoisted}), x,
      q_filter(substitute_expr(e, hoisted, e_name(x, y)), q0));
  return RuleOut::ok(replace_at(c.root, c.path, out));
}

RuleOut rule_push_agg_into_index(RuleCtx& c, const RuleAux&) {
  if (c.sub->kind != Kind::kSelect) return RuleOut::no("expected a select");
  QueryPtr idx = c.sub->children[0];
  if (idx->kind != Kind::kAList && idx->kind != Kind::kAHashIdx &&
      idx->kind != Kind::kAOrderedIdx) {
    return RuleOut::no("the select's input is not a list or an index");
  }
  for (const auto& it : c.sub->items) {
    if (it.expr->kind != ScalarExpr::Kind::kSum) {
      return RuleOut::no("only all-sum selects are supported");
    }
  }
  if (c.sub->items.empty()) return RuleOut::no("the select has no outputs");
  // Store partial sums per element; the envelope adds them back up.  The
  // envelope stays even for a hash index: a missed lookup produces no rows,
  // while the original aggregate produces one, and only the outer select
  // makes the two line up.
  std::vector<NamedExpr> inner, outer;
  for (const auto& it : c.sub->items) {
    std::string part = c.fresh.fresh();
    inner.push_back({part, it.expr});
    outer.push_back({it.name, e_sum(e_name(part))});
  }
  QueryPtr idx2 = with_children(
      idx, {idx->children[0], q_select(std::move(inner), idx->children[1])});
  return RuleOut::ok(
      replace_at(c.root, c.path, q_select(std::move(outer), idx2)));
}

// --- Partition-based rules ---------------------------------------------------

// True when `e` is a per-row function of the input schema `sch`: it reads at
// least one field, only unqualified names from `sch`, no parameters, no
// aggregates.
bool is_partition_key(const ExprPtr& e, const std::set<Ident>& sch,
                      const Catalog& cat) {
  if (contains_aggregate(e)) return false;
  std::set<Ident> frees = free_names(e, cat);
  if (frees.empty()) return false;
  for (const auto& n : frees) {
    if (n.is_param() || n.qualified() || !sch.count(n)) return false;
  }
  return true;
}

// True when `e` never reads the filtered input's fields, so it can move to
// an index probe position.
bool is_probe_side(const ExprPtr& e, const std::set<Ident>& sch,
                   const Catalog& cat) {
  for (const auto& n : free_names(e, cat)) {
    if (!n.qualified() && !n.is_param() && sch.count(n)) return false;
  }
  return true;
}

std::string partition_key_name(const ExprPtr& key, FreshGen* fresh) {
  if (key->kind == ScalarExpr::Kind::kName && !key->name.qualified()) {
    return key->name.base;
  }
  return fresh->fresh();
}

RuleOut rule_elim_eq_filter(RuleCtx& c, const RuleAux& aux) {
  if (c.sub->kind != Kind::kFilter) return RuleOut::no("expected a filter");
  QueryPtr q0 = c.sub->children[0];
  std::set<Ident> sch = schema_ident_set(q0, c.cat);
  std::vector<ExprPtr> cs = conjuncts_of(c.sub->pred);

  struct Cand {
    int idx;
    ExprPtr key, probe;
  };
  std::vector<Cand> cands;
  for (int i = 0; i < static_cast<int>(cs.size()); ++i) {
    const ExprPtr& cj = cs[i];
    if (cj->kind != ScalarExpr::Kind::kBinop || cj->op != BinOp::kEq) continue;
    if (is_partition_key(cj->a, sch, c.cat) &&
        is_probe_side(cj->b, sch, c.cat)) {
      cands.push_back({i, cj->a, cj->b});
    } else if (is_partition_key(cj->b, sch, c.cat) &&
               is_probe_side(cj->a, sch, c.cat)) {
      cands.push_back({i, cj->b, cj->a});
    }
  }
  const Cand* chosen = nullptr;
  if (aux.conjunct) {
    for (const auto& cd : cands) {
      if (cd.idx == *aux.conjunct) chosen = &cd;
    }
    if (!chosen) {
      return RuleOut::no("the chosen conjunct is not an equality between a "
                         "key over the input and a probe");
    }
  } else if (cands.size() == 1) {
    chosen = &cands[0];
  } else if (cands.empty()) {
    return RuleOut::no("no equality conjunct splits into a key over the "
                       "input and a probe");
  } else {
    return RuleOut::no("several conjuncts qualify; pick one");
  }
  if (auto why = runtime_bound_name(free_names(q0, c.cat), c)) {
    return RuleOut::no("the input cannot be enumerated at compile time: " +
                       *why);
  }

  std::string x = c.fresh.fresh();
  std::string k = partition_key_name(chosen->key, &c.fresh);
  PartitionResult part = partition(q0, chosen->key, x, k);
  QueryPtr idx = q_ahashidx(part.keys, x, part.values, {chosen->probe});
  std::vector<ExprPtr> rest;
  for (int i = 0; i < static_cast<int>(cs.size()); ++i) {
    if (i != chosen->idx) rest.push_back(cs[i]);
  }
  QueryPtr out = rest.empty() ? idx : q_filter(and_all(rest), idx);
  return RuleOut::ok(replace_at(c.root, c.path, out));
}

RuleOut rule_elim_range_filter(RuleCtx& c, const RuleAux&) {
  if (c.sub->kind != Kind::kFilter) return RuleOut::no("expected a filter");
  QueryPtr q0 = c.sub->children[0];
  std::set<Ident> sch = schema_ident_set(q0, c.cat);
  std::vector<ExprPtr> cs = conjuncts_of(c.sub->pred);

  // Normalize <= and >= into (lo, hi) pairs: a <= b and b >= a both read
  // "a is the lower side".
  auto as_le = [](const ExprPtr& e) -> std::pair<ExprPtr, ExprPtr> {
    if (e->kind == ScalarExpr::Kind::kBinop) {
      if (e->op == BinOp::kLe) return {e->a, e->b};
      if (e->op == BinOp::kGe) return {e->b, e->a};
    }
    return {nullptr, nullptr};
  };

  int lo_idx = -1, hi_idx = -1;
  ExprPtr key, lo, hi;
  for (int i = 0; i < static_cast<int>(cs.size()) && lo_idx < 0; ++i) {
    auto [l1, r1] = as_le(cs[i]);  // lo <= key
    if (!l1 || !is_partition_key(r1, sch, c.cat) ||
        !is_probe_side(l1, sch, c.cat)) {
      continue;
    }
    for (int j = 0; j < static_cast<int>(cs.size()); ++j) {
      if (j == i) continue;
      auto [l2, r2] = as_le(cs[j]);  // key <= hi
      if (!l2 || !expr_equal(l2, r1) || !is_probe_side(r2, sch, c.cat)) {
        continue;
      }
      lo_idx = i;
      hi_idx = j;
      key = r1;
      lo = l1;
      hi = r2;
      break;
    }
  }
  if (lo_idx < 0) {
    return RuleOut::no("no pair of conjuncts forms an inclusive range over a "
                       "key of the input");
  }
  if (auto why = runtime_bound_name(free_names(q0, c.cat), c)) {
    return RuleOut::no("the input cannot be enumerated at compile time: " +
                       *why);
  }

  std::string x = c.fresh.fresh();
  std::string k = partition_key_name(key, &c.fresh);
  PartitionResult part = partition(q0, key, x, k);
  // The index walks keys in ascending order, so sort them; dedup alone
  // leaves them in first-occurrence order.
  QueryPtr keys_sorted =
      q_orderby({{e_name(k), SortDir::kAsc}}, part.keys);
  QueryPtr idx = q_aorderedidx(keys_sorted, x, part.values, {lo}, {hi});
  std::vector<ExprPtr> rest;
  for (int i = 0; i < static_cast<int>(cs.size()); ++i) {
    if (i != lo_idx && i != hi_idx) rest.push_back(cs[i]);
  }
  QueryPtr out = rest.empty() ? idx : q_filter(and_all(rest), idx);
  return RuleOut::ok(replace_at(c.root, c.path, out));
}

RuleOut rule_elim_groupby(RuleCtx& c, const RuleAux&) {
  if (c.sub->kind != Kind::kGroupBy) return RuleOut::no("expected a groupby");
  if (c.sub->keys.empty()) return RuleOut::no("the groupby has no keys");
  QueryPtr q0 = c.sub->children[0];
  std::set<Ident> sch = schema_ident_set(q0, c.cat);
  for (const auto& k : c.sub->keys) {
    if (k.qualified() || !sch.count(k)) {
      return RuleOut::no("grouping key " + k.to_string() +
                         " is not a field of the input");
    }
  }
  if (auto why = runtime_bound_name(free_names(q0, c.cat), c)) {
    return RuleOut::no("the input cannot be enumerated at compile time: " +
                       *why);
  }

  // A multi-key partition: the key query carries every grouping field and
  // the value query matches on all of them at once.
  std::string x = c.fresh.fresh();
  std::vector<NamedExpr> key_items;
  std::vector<ExprPtr> matches;
  for (const auto& k : c.sub->keys) {
    key_items.push_back({k.base, e_name(k)});
    matches.push_back(e_eq(e_name(x, k.base), e_name(k)));
  }
  QueryPtr qk = q_dedup(q_select(std::move(key_items), q0));
  QueryPtr qv = q_filter(and_all(matches), q0);
  QueryPtr out = q_alist(qk, x, q_select(c.sub->items, qv));
  return RuleOut::ok(replace_at(c.root, c.path, out));
}

// --- Join materialization ----------------------------------------------------

// Splits a single-equality join predicate into (left key, right key), trying
// both orientations.  Returns false when the predicate has another shape.
bool split_equi_pred(const ExprPtr& pred, const std::set<Ident>& ls,
                     const std::set<Ident>& rs, const Catalog& cat,
                     ExprPtr* left_key, ExprPtr* right_key) {
  std::vector<ExprPtr> cs = conjuncts_of(pred);
  if (cs.size() != 1 || cs[0]->kind != ScalarExpr::Kind::kBinop ||
      cs[0]->op != BinOp::kEq) {
    return false;
  }
  const ExprPtr& a = cs[0]->a;
  const ExprPtr& b = cs[0]->b;
  if (is_partition_key(a, ls, cat) && is_partition_key(b, rs, cat)) {
    *left_key = a;
    *right_key = b;
    return true;
  }
  if (is_partition_key(b, ls, cat) && is_partition_key(a, rs, cat)) {
    *left_key = b;
    *right_key = a;
    return true;
  }
  return false;
}

RuleOut rule_join_to_pairs(RuleCtx& c, const RuleAux&) {
  if (c.sub->kind != Kind::kJoin) return RuleOut::no("expected a join");
  QueryPtr l = c.sub->children[0], r = c.sub->children[1];
  Schema lsch = schema_of(l, c.cat), rsch = schema_of(r, c.cat);
  if (schemas_overlap(lsch, rsch)) {
    return RuleOut::no("the join sides share field names");
  }
  std::set<Ident> ls(lsch.begin(), lsch.end()), rs(rsch.begin(), rsch.end());
  ExprPtr lkey, rkey;
  if (!split_equi_pred(c.sub->pred, ls, rs, c.cat, &lkey, &rkey)) {
    return RuleOut::no("the join predicate is not a single equality between "
                       "the two sides");
  }
  if (auto why = runtime_bound_name(free_names(c.sub, c.cat), c)) {
    return RuleOut::no("the join cannot be evaluated at compile time: " +
                       *why);
  }
  // One list element per distinct key; each element is the cross product of
  // the left and right rows for that key.
  std::string x = c.fresh.fresh();
  std::string k = partition_key_name(lkey, &c.fresh);
  PartitionResult part = partition(l, lkey, x, k);
  QueryPtr rvals = q_filter(e_eq(e_name(x, k), rkey), r);
  QueryPtr out = q_alist(
      part.keys, x, q_atuple({part.values, rvals}, TupleKind::kCross));
  return RuleOut::ok(replace_at(c.root, c.path, out));
}

RuleOut rule_join_to_nested(RuleCtx& c, const RuleAux&) {
  if (c.sub->kind != Kind::kJoin) return RuleOut::no("expected a join");
  QueryPtr l = c.sub->children[0], r = c.sub->children[1];
  Schema lsch = schema_of(l, c.cat), rsch = schema_of(r, c.cat);
  if (schemas_overlap(lsch, rsch)) {
    return RuleOut::no("the join sides share field names");
  }
  if (auto why = runtime_bound_name(free_names(c.sub, c.cat), c)) {
    return RuleOut::no("the join cannot be evaluated at compile time: " +
                       *why);
  }
  // Each left row becomes a tuple of its fields plus the list of right rows
  // matching it; the predicate moves into the inner list's key query with
  // its left-side names read through the outer binder.
  std::string x = c.fresh.fresh();
  std::string x2 = c.fresh.fresh();
  ExprPtr inner_pred = qualify_names(c.sub->pred, lsch, x);
  QueryPtr inner = q_alist(
      q_filter(inner_pred, r), x2,
      q_atuple(scalars_of(rsch, x2), TupleKind::kCross));
  std::vector<QueryPtr> parts = scalars_of(lsch, x);
  parts.push_back(inner);
  QueryPtr out = q_alist(l, x, q_atuple(std::move(parts), TupleKind::kCross));
  return RuleOut::ok(replace_at(c.root, c.path, out));
}

RuleOut rule_join_to_hash(RuleCtx& c, const RuleAux&) {
  if (c.sub->kind != Kind::kJoin) return RuleOut::no("expected a join");
  QueryPtr l = c.sub->children[0], r = c.sub->children[1];
  Schema lsch = schema_of(l, c.cat), rsch = schema_of(r, c.cat);
  if (schemas_overlap(lsch, rsch)) {
    return RuleOut::no("the join sides share field names");
  }
  std::set<Ident> ls(lsch.begin(), lsch.end()), rs(rsch.begin(), rsch.end());
  ExprPtr lkey, rkey;
  if (!split_equi_pred(c.sub->pred, ls, rs, c.cat, &lkey, &rkey)) {
    return RuleOut::no("the join predicate is not a single equality between "
                       "the two sides");
  }
  // Only the right side is stored; the left side keeps running as a query,
  // so it may even read parameters.
  if (auto why = runtime_bound_name(free_names(r, c.cat), c)) {
    return RuleOut::no("the right side cannot be stored: " + *why);
  }
  std::string x = c.fresh.fresh();
  std::string xk = c.fresh.fresh();
  std::string k = partition_key_name(rkey, &c.fresh);
  PartitionResult part = partition(r, rkey, xk, k);
  ExprPtr probe = qualify_names(lkey, lsch, x);
  // depjoin yields only right-hand tuples, so a select re-exports the left
  // row through the binder to keep the join's full schema.
  std::vector<NamedExpr> reexport = passthrough_items(lsch, x);
  std::vector<NamedExpr> right_items = passthrough_items(rsch);
  reexport.insert(reexport.end(), right_items.begin(), right_items.end());
  QueryPtr out = q_depjoin(
      l, x,
      q_select(std::move(reexport),
               q_ahashidx(part.keys, xk, part.values, {probe})));
  return RuleOut::ok(replace_at(c.root, c.path, out));
}

// --- Predicate precomputation ------------------------------------------------

RuleOut rule_predicate_precompute(RuleCtx& c, const RuleAux& aux) {
  if (c.sub->kind != Kind::kFilter) return RuleOut::no("expected a filter");
  if (!aux.domain) return RuleOut::no("a parameter domain is required");
  const ParamDomain& dom = *aux.domain;
  if (!dom.parameter.is_param()) {
    return RuleOut::no(dom.parameter.to_string() + " is not a parameter");
  }
  if (dom.values.empty()) return RuleOut::no("the domain is empty");
  for (size_t i = 0; i < dom.values.size(); ++i) {
    for (size_t j = i + 1; j < dom.values.size(); ++j) {
      if (Value::compare_total(dom.values[i], dom.values[j]) == 0) {
        return RuleOut::no("the domain values are not distinct");
      }
    }
  }
  ExprPtr e = c.sub->pred;
  if (has_subquery(e)) {
    return RuleOut::no("predicates containing subqueries are not supported");
  }
  std::set<Ident> params;
  for (const auto& n : free_names(e, c.cat)) {
    if (n.is_param()) params.insert(n);
  }
  if (params != std::set<Ident>{dom.parameter}) {
    return RuleOut::no("the predicate must read exactly the domain's "
                       "parameter");
  }
  // The witness columns ride along with the relation, so the input must be a
  // plain chain of filters over one relation.
  QueryPtr cur = c.sub->children[0];
  while (cur->kind == Kind::kFilter) cur = cur->children[0];
  if (cur->kind != Kind::kRelation) {
    return RuleOut::no("the input must be filters over a single relation");
  }
  Schema rel_sch = schema_of(cur, c.cat);

  // One witness per domain value: the predicate with the parameter pinned.
  std::vector<NamedExpr> witness_items;
  std::vector<std::string> witness_names;
  for (const auto& v : dom.values) {
    std::string w = c.fresh.fresh();
    witness_names.push_back(w);
    witness_items.push_back(
        {w, substitute_name(e, dom.parameter, e_const(v))});
  }
  std::vector<NamedExpr> rel_items = passthrough_items(rel_sch);
  witness_items.insert(witness_items.end(), rel_items.begin(),
                       rel_items.end());
  QueryPtr rel2 = q_select(std::move(witness_items), cur);

  std::function<QueryPtr(const QueryPtr&)> rebuild =
      [&](const QueryPtr& q) -> QueryPtr {
    if (q->kind == Kind::kRelation) return rel2;
    return q_filter(q->pred, rebuild(q->children[0]));
  };

  // In-domain parameters short-circuit to their witness; anything else falls
  // back to the original predicate.  The two predicates agree on truth
  // (though not always on null versus false), and truth is all a filter
  // observes.
  ExprPtr guarded;
  for (size_t i = 0; i < dom.values.size(); ++i) {
    ExprPtr arm = e_and(e_name(Ident(witness_names[i])),
                        e_eq(e_name(dom.parameter), e_const(dom.values[i])));
    guarded = guarded ? e_or(guarded, arm) : arm;
  }
  ExprPtr pred2 = e_or(guarded, e);

  // The witnesses would otherwise leak into the output; project them away.
  Schema out_sch = schema_of(c.sub, c.cat);
  QueryPtr out = q_select(passthrough_items(out_sch),
                          q_filter(pred2, rebuild(c.sub->children[0])));
  return RuleOut::ok(replace_at(c.root, c.path, out));
}

// --- Catalog -----------------------------------------------------------------

struct RuleEntry {
  const char* name;
  RuleFn fn;
};

const RuleEntry kRules[] = {
    {"hoist-filter", rule_hoist_filter},
    {"push-filter", rule_push_filter},
    {"merge-filters", rule_merge_filters},
    {"split-filter", rule_split_filter},
    {"commute-join", rule_commute_join},
    {"project", rule_project},
    {"precompute-static", rule_precompute_static},
    {"hoist-static-from-filter", rule_hoist_static_from_filter},
    {"push-agg-into-index", rule_push_agg_into_index},
    {"elim-eq-filter", rule_elim_eq_filter},
    {"elim-range-filter", rule_elim_range_filter},
    {"elim-groupby", rule_elim_groupby},
    {"join-to-pairs", rule_join_to_pairs},
    {"join-to-nested", rule_join_to_nested},
    {"join-to-hash", rule_join_to_hash},
    {"predicate-precompute", rule_predicate_precompute},
};

RuleFn find_rule(const std::string& name) {
  for (const auto& r : kRules) {
    if (name == r.name) return r.fn;
  }
  throw Error("unknown rule '" + name + "'");
}

RuleOut run_rule(const std::string& rule, const QueryPtr& root,
                 const Path& path, const RuleAux& aux, const Catalog& cat) {
  RuleFn fn = find_rule(rule);
  RuleCtx ctx{root,          path, subterm_at(root, path),
              cat,           FreshGen(root),
              binder_stages(root, path)};
  return fn(ctx, aux);
}

}  // namespace

const std::vector<std::string>& rule_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& r : kRules) out.push_back(r.name);
    return out;
  }();
  return names;
}

std::optional<std::string> why_not_applicable(const std::string& rule,
                                              const QueryPtr& root,
                                              const Path& path,
                                              const RuleAux& aux,
                                              const Catalog& cat) {
  try {
    RuleOut out = run_rule(rule, root, path, aux, cat);
    if (out.program) return std::nullopt;
    return out.reason;
  } catch (const Error& e) {
    return std::string(e.what());
  }
}

QueryPtr apply_rule(const std::string& rule, const QueryPtr& root,
                    const Path& path, const RuleAux& aux, const Catalog& cat) {
  RuleOut out = run_rule(rule, root, path, aux, cat);
  if (!out.program) {
    throw Error("rule '" + rule + "' does not apply at " +
                path_to_string(path) + ": " + out.reason);
  }
  return out.program;
}

}  // namespace strata

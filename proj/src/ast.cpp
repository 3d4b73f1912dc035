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

#include "strata/ast.hpp"

#include <algorithm>
#include <map>

namespace strata {

const char* query_kind_name(QueryExpr::Kind k) {
  switch (k) {
    case QueryExpr::Kind::kRelation: return "relation";
    case QueryExpr::Kind::kDedup: return "dedup";
    case QueryExpr::Kind::kSelect: return "select";
    case QueryExpr::Kind::kFilter: return "filter";
    case QueryExpr::Kind::kJoin: return "join";
    case QueryExpr::Kind::kGroupBy: return "groupby";
    case QueryExpr::Kind::kOrderBy: return "orderby";
    case QueryExpr::Kind::kDepJoin: return "depjoin";
    case QueryExpr::Kind::kAScalar: return "ascalar";
    case QueryExpr::Kind::kATuple: return "atuple";
    case QueryExpr::Kind::kAList: return "alist";
    case QueryExpr::Kind::kAHashIdx: return "ahashidx";
    case QueryExpr::Kind::kAOrderedIdx: return "aorderedidx";
    case QueryExpr::Kind::kAEmpty: return "empty";
  }
  return "?";
}

namespace {

std::shared_ptr<ScalarExpr> new_expr(ScalarExpr::Kind k) {
  auto e = std::make_shared<ScalarExpr>();
  e->kind = k;
  return e;
}

std::shared_ptr<QueryExpr> new_query(QueryExpr::Kind k) {
  auto q = std::make_shared<QueryExpr>();
  q->kind = k;
  return q;
}

}  // namespace

ExprPtr e_const(Value v) {
  auto e = new_expr(ScalarExpr::Kind::kConst);
  e->value = std::move(v);
  return e;
}
ExprPtr e_int(int64_t v) { return e_const(Value::integer(v)); }
ExprPtr e_bool(bool v) { return e_const(Value::boolean(v)); }
ExprPtr e_str(std::string s) { return e_const(Value::string(std::move(s))); }

ExprPtr e_name(Ident id) {
  auto e = new_expr(ScalarExpr::Kind::kName);
  e->name = std::move(id);
  return e;
}
ExprPtr e_name(std::string base) { return e_name(Ident(std::move(base))); }
ExprPtr e_name(std::string scope, std::string base) {
  return e_name(Ident(std::move(scope), std::move(base)));
}
ExprPtr e_param(std::string name) {
  if (name.empty() || name[0] != '$') name = "$" + name;
  return e_name(Ident(std::move(name)));
}

ExprPtr e_binop(BinOp op, ExprPtr a, ExprPtr b) {
  auto e = new_expr(ScalarExpr::Kind::kBinop);
  e->op = op;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}
ExprPtr e_and(ExprPtr a, ExprPtr b) {
  return e_binop(BinOp::kAnd, std::move(a), std::move(b));
}
ExprPtr e_or(ExprPtr a, ExprPtr b) {
  return e_binop(BinOp::kOr, std::move(a), std::move(b));
}
ExprPtr e_eq(ExprPtr a, ExprPtr b) {
  return e_binop(BinOp::kEq, std::move(a), std::move(b));
}

ExprPtr e_not(ExprPtr a) {
  auto e = new_expr(ScalarExpr::Kind::kNot);
  e->a = std::move(a);
  return e;
}
ExprPtr e_if(ExprPtr cond, ExprPtr then_e, ExprPtr else_e) {
  auto e = new_expr(ScalarExpr::Kind::kIf);
  e->a = std::move(cond);
  e->b = std::move(then_e);
  e->c = std::move(else_e);
  return e;
}
ExprPtr e_exists(QueryPtr q) {
  auto e = new_expr(ScalarExpr::Kind::kExists);
  e->query = std::move(q);
  return e;
}
ExprPtr e_first(QueryPtr q) {
  auto e = new_expr(ScalarExpr::Kind::kFirst);
  e->query = std::move(q);
  return e;
}
ExprPtr e_count() { return new_expr(ScalarExpr::Kind::kCount); }
ExprPtr e_sum(ExprPtr a) {
  auto e = new_expr(ScalarExpr::Kind::kSum);
  e->a = std::move(a);
  return e;
}
ExprPtr e_min(ExprPtr a) {
  auto e = new_expr(ScalarExpr::Kind::kMin);
  e->a = std::move(a);
  return e;
}
ExprPtr e_max(ExprPtr a) {
  auto e = new_expr(ScalarExpr::Kind::kMax);
  e->a = std::move(a);
  return e;
}
ExprPtr e_avg(ExprPtr a) {
  auto e = new_expr(ScalarExpr::Kind::kAvg);
  e->a = std::move(a);
  return e;
}

std::vector<ExprPtr> conjuncts_of(const ExprPtr& e) {
  std::vector<ExprPtr> out;
  if (e->kind == ScalarExpr::Kind::kBinop && e->op == BinOp::kAnd) {
    auto l = conjuncts_of(e->a);
    auto r = conjuncts_of(e->b);
    out.insert(out.end(), l.begin(), l.end());
    out.insert(out.end(), r.begin(), r.end());
  } else {
    out.push_back(e);
  }
  return out;
}

ExprPtr and_all(const std::vector<ExprPtr>& cs) {
  if (cs.empty()) return e_bool(true);
  ExprPtr acc = cs[0];
  for (size_t i = 1; i < cs.size(); ++i) acc = e_and(acc, cs[i]);
  return acc;
}

QueryPtr q_relation(std::string name) {
  auto q = new_query(QueryExpr::Kind::kRelation);
  q->relation = std::move(name);
  return q;
}
QueryPtr q_dedup(QueryPtr q0) {
  auto q = new_query(QueryExpr::Kind::kDedup);
  q->children = {std::move(q0)};
  return q;
}
QueryPtr q_select(std::vector<NamedExpr> items, QueryPtr q0) {
  auto q = new_query(QueryExpr::Kind::kSelect);
  q->items = std::move(items);
  q->children = {std::move(q0)};
  return q;
}
QueryPtr q_filter(ExprPtr pred, QueryPtr q0) {
  auto q = new_query(QueryExpr::Kind::kFilter);
  q->pred = std::move(pred);
  q->children = {std::move(q0)};
  return q;
}
QueryPtr q_join(ExprPtr pred, QueryPtr a, QueryPtr b) {
  auto q = new_query(QueryExpr::Kind::kJoin);
  q->pred = std::move(pred);
  q->children = {std::move(a), std::move(b)};
  return q;
}
QueryPtr q_groupby(std::vector<NamedExpr> items, std::vector<Ident> keys,
                   QueryPtr q0) {
  auto q = new_query(QueryExpr::Kind::kGroupBy);
  q->items = std::move(items);
  q->keys = std::move(keys);
  q->children = {std::move(q0)};
  return q;
}
QueryPtr q_orderby(std::vector<SortKey> keys, QueryPtr q0) {
  auto q = new_query(QueryExpr::Kind::kOrderBy);
  q->sort_keys = std::move(keys);
  q->children = {std::move(q0)};
  return q;
}
QueryPtr q_depjoin(QueryPtr lhs, std::string scope, QueryPtr rhs) {
  auto q = new_query(QueryExpr::Kind::kDepJoin);
  q->scope = std::move(scope);
  q->children = {std::move(lhs), std::move(rhs)};
  return q;
}
QueryPtr q_ascalar(NamedExpr item) {
  auto q = new_query(QueryExpr::Kind::kAScalar);
  q->scalar = std::move(item);
  return q;
}
QueryPtr q_ascalar(ExprPtr e) {
  if (e->kind != ScalarExpr::Kind::kName) {
    throw Error("ascalar without an explicit field name requires a name expression");
  }
  return q_ascalar(NamedExpr{e->name.base, e});
}
QueryPtr q_atuple(std::vector<QueryPtr> qs, TupleKind kind) {
  auto q = new_query(QueryExpr::Kind::kATuple);
  q->tuple_kind = kind;
  q->children = std::move(qs);
  return q;
}
QueryPtr q_alist(QueryPtr keys, std::string scope, QueryPtr value) {
  auto q = new_query(QueryExpr::Kind::kAList);
  q->scope = std::move(scope);
  q->children = {std::move(keys), std::move(value)};
  return q;
}
QueryPtr q_ahashidx(QueryPtr keys, std::string scope, QueryPtr value,
                    std::vector<ExprPtr> lookup) {
  auto q = new_query(QueryExpr::Kind::kAHashIdx);
  q->scope = std::move(scope);
  q->key_exprs = std::move(lookup);
  q->children = {std::move(keys), std::move(value)};
  return q;
}
QueryPtr q_aorderedidx(QueryPtr keys, std::string scope, QueryPtr value,
                       std::vector<ExprPtr> lo, std::vector<ExprPtr> hi) {
  auto q = new_query(QueryExpr::Kind::kAOrderedIdx);
  q->scope = std::move(scope);
  q->lo_exprs = std::move(lo);
  q->hi_exprs = std::move(hi);
  q->children = {std::move(keys), std::move(value)};
  return q;
}
QueryPtr q_empty() { return new_query(QueryExpr::Kind::kAEmpty); }

QueryPtr with_children(const QueryPtr& q, std::vector<QueryPtr> children) {
  if (children.size() != q->children.size()) {
    throw Error("with_children: arity mismatch");
  }
  auto out = std::make_shared<QueryExpr>(*q);
  out->children = std::move(children);
  return out;
}

// --- Paths -------------------------------------------------------------------

std::string path_to_string(const Path& p) {
  if (p.empty()) return "/";
  std::string out;
  for (int step : p) out += "/" + std::to_string(step);
  return out;
}

Path parse_path(const std::string& text) {
  Path p;
  if (text.empty() || text == "/") return p;
  size_t i = 0;
  if (text[i] == '/') ++i;
  while (i < text.size()) {
    size_t j = text.find('/', i);
    std::string part = text.substr(i, j == std::string::npos ? j : j - i);
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
      throw Error("bad path: " + text);
    }
    p.push_back(std::stoi(part));
    i = j == std::string::npos ? text.size() : j + 1;
  }
  return p;
}

QueryPtr subterm_at(const QueryPtr& root, const Path& p) {
  QueryPtr q = root;
  for (int step : p) {
    if (step < 0 || size_t(step) >= q->children.size()) {
      throw Error("path " + path_to_string(p) + " does not exist in the term");
    }
    q = q->children[step];
  }
  return q;
}

QueryPtr replace_at(const QueryPtr& root, const Path& p, const QueryPtr& sub) {
  if (p.empty()) return sub;
  int step = p.front();
  if (step < 0 || size_t(step) >= root->children.size()) {
    throw Error("path " + path_to_string(p) + " does not exist in the term");
  }
  std::vector<QueryPtr> children = root->children;
  children[step] = replace_at(children[step], Path(p.begin() + 1, p.end()), sub);
  return with_children(root, std::move(children));
}

namespace {
void all_paths_walk(const QueryPtr& q, Path* cur, std::vector<Path>* out) {
  out->push_back(*cur);
  for (size_t i = 0; i < q->children.size(); ++i) {
    cur->push_back(int(i));
    all_paths_walk(q->children[i], cur, out);
    cur->pop_back();
  }
}
}  // namespace

std::vector<Path> all_paths(const QueryPtr& root) {
  std::vector<Path> out;
  Path cur;
  all_paths_walk(root, &cur, &out);
  return out;
}

// --- Equality ----------------------------------------------------------------

namespace {

// Scope translation for equality-modulo-renaming; null means strict equality.
struct ScopeMap {
  std::map<std::string, std::string> fwd, rev;

  bool match(const std::string& a, const std::string& b) {
    auto fa = fwd.find(a);
    auto rb = rev.find(b);
    if (fa == fwd.end() && rb == rev.end()) {
      fwd[a] = b;
      rev[b] = a;
      return true;
    }
    return fa != fwd.end() && fa->second == b && rb != rev.end() &&
           rb->second == a;
  }
  bool match_ident(const Ident& a, const Ident& b) {
    if (a.scope.has_value() != b.scope.has_value()) return false;
    if (a.base != b.base) return false;
    if (!a.scope) return true;
    // A use of an unmapped scope pair is also recorded; binders dominate in
    // well-scoped terms, so this only matters for free scoped names.
    return match(*a.scope, *b.scope);
  }
};

bool expr_eq(const ExprPtr& a, const ExprPtr& b, ScopeMap* sm);
bool query_eq(const QueryPtr& a, const QueryPtr& b, ScopeMap* sm);

bool ident_eq(const Ident& a, const Ident& b, ScopeMap* sm) {
  return sm ? sm->match_ident(a, b) : a == b;
}

bool named_eq(const NamedExpr& a, const NamedExpr& b, ScopeMap* sm) {
  return a.name == b.name && expr_eq(a.expr, b.expr, sm);
}

bool expr_eq(const ExprPtr& a, const ExprPtr& b, ScopeMap* sm) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case ScalarExpr::Kind::kConst:
      return a->value.kind() == b->value.kind() && a->value == b->value &&
             (a->value.kind() != ValueKind::kFixed ||
              a->value.scale() == b->value.scale());
    case ScalarExpr::Kind::kName: return ident_eq(a->name, b->name, sm);
    case ScalarExpr::Kind::kBinop:
      return a->op == b->op && expr_eq(a->a, b->a, sm) &&
             expr_eq(a->b, b->b, sm);
    case ScalarExpr::Kind::kNot: return expr_eq(a->a, b->a, sm);
    case ScalarExpr::Kind::kIf:
      return expr_eq(a->a, b->a, sm) && expr_eq(a->b, b->b, sm) &&
             expr_eq(a->c, b->c, sm);
    case ScalarExpr::Kind::kExists:
    case ScalarExpr::Kind::kFirst: return query_eq(a->query, b->query, sm);
    case ScalarExpr::Kind::kCount: return true;
    case ScalarExpr::Kind::kSum:
    case ScalarExpr::Kind::kMin:
    case ScalarExpr::Kind::kMax:
    case ScalarExpr::Kind::kAvg: return expr_eq(a->a, b->a, sm);
  }
  return false;
}

bool query_eq(const QueryPtr& a, const QueryPtr& b, ScopeMap* sm) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  if (a->children.size() != b->children.size()) return false;
  if (a->relation != b->relation) return false;
  if (a->items.size() != b->items.size()) return false;
  for (size_t i = 0; i < a->items.size(); ++i) {
    if (!named_eq(a->items[i], b->items[i], sm)) return false;
  }
  if (a->keys.size() != b->keys.size()) return false;
  for (size_t i = 0; i < a->keys.size(); ++i) {
    if (!ident_eq(a->keys[i], b->keys[i], sm)) return false;
  }
  if (a->sort_keys.size() != b->sort_keys.size()) return false;
  for (size_t i = 0; i < a->sort_keys.size(); ++i) {
    if (a->sort_keys[i].dir != b->sort_keys[i].dir ||
        !expr_eq(a->sort_keys[i].expr, b->sort_keys[i].expr, sm)) {
      return false;
    }
  }
  if ((a->pred != nullptr) != (b->pred != nullptr)) return false;
  if (a->pred && !expr_eq(a->pred, b->pred, sm)) return false;
  if (a->kind == QueryExpr::Kind::kAScalar &&
      !named_eq(a->scalar, b->scalar, sm)) {
    return false;
  }
  if (a->tuple_kind != b->tuple_kind) return false;
  auto exprs_eq = [&](const std::vector<ExprPtr>& x,
                      const std::vector<ExprPtr>& y) {
    if (x.size() != y.size()) return false;
    for (size_t i = 0; i < x.size(); ++i) {
      if (!expr_eq(x[i], y[i], sm)) return false;
    }
    return true;
  };
  if (!exprs_eq(a->key_exprs, b->key_exprs) ||
      !exprs_eq(a->lo_exprs, b->lo_exprs) ||
      !exprs_eq(a->hi_exprs, b->hi_exprs)) {
    return false;
  }
  if (a->binds_scope()) {
    if (sm) {
      if (!sm->match(a->scope, b->scope)) return false;
    } else if (a->scope != b->scope) {
      return false;
    }
  }
  for (size_t i = 0; i < a->children.size(); ++i) {
    if (!query_eq(a->children[i], b->children[i], sm)) return false;
  }
  return true;
}

}  // namespace

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  return expr_eq(a, b, nullptr);
}
bool query_equal(const QueryPtr& a, const QueryPtr& b) {
  return query_eq(a, b, nullptr);
}
bool query_equal_modulo_scopes(const QueryPtr& a, const QueryPtr& b) {
  ScopeMap sm;
  return query_eq(a, b, &sm);
}

// --- Traversal ---------------------------------------------------------------

namespace {

void collect_query_idents(const QueryPtr& q, std::vector<Ident>* out);

void collect_expr(const ExprPtr& e, std::vector<Ident>* out) {
  if (!e) return;
  switch (e->kind) {
    case ScalarExpr::Kind::kName: out->push_back(e->name); break;
    case ScalarExpr::Kind::kExists:
    case ScalarExpr::Kind::kFirst: collect_query_idents(e->query, out); break;
    default:
      collect_expr(e->a, out);
      collect_expr(e->b, out);
      collect_expr(e->c, out);
      break;
  }
}

void collect_query_idents(const QueryPtr& q, std::vector<Ident>* out) {
  std::vector<Ident> node;
  collect_node_idents(*q, &node);
  out->insert(out->end(), node.begin(), node.end());
  for (const auto& c : q->children) collect_query_idents(c, out);
}

}  // namespace

void collect_expr_idents(const ExprPtr& e, std::vector<Ident>* out) {
  collect_expr(e, out);
}

void collect_expr_subqueries(const ExprPtr& e, std::vector<QueryPtr>* out) {
  if (!e) return;
  if (e->kind == ScalarExpr::Kind::kExists ||
      e->kind == ScalarExpr::Kind::kFirst) {
    out->push_back(e->query);
    return;
  }
  collect_expr_subqueries(e->a, out);
  collect_expr_subqueries(e->b, out);
  collect_expr_subqueries(e->c, out);
}

void collect_node_exprs(const QueryExpr& q, std::vector<ExprPtr>* out) {
  for (const auto& it : q.items) out->push_back(it.expr);
  for (const auto& sk : q.sort_keys) out->push_back(sk.expr);
  if (q.pred) out->push_back(q.pred);
  if (q.kind == QueryExpr::Kind::kAScalar) out->push_back(q.scalar.expr);
  for (const auto& e : q.key_exprs) out->push_back(e);
  for (const auto& e : q.lo_exprs) out->push_back(e);
  for (const auto& e : q.hi_exprs) out->push_back(e);
}

void collect_node_idents(const QueryExpr& q, std::vector<Ident>* out) {
  for (const auto& it : q.items) collect_expr(it.expr, out);
  for (const auto& k : q.keys) out->push_back(k);
  for (const auto& sk : q.sort_keys) collect_expr(sk.expr, out);
  collect_expr(q.pred, out);
  if (q.kind == QueryExpr::Kind::kAScalar) collect_expr(q.scalar.expr, out);
  for (const auto& e : q.key_exprs) collect_expr(e, out);
  for (const auto& e : q.lo_exprs) collect_expr(e, out);
  for (const auto& e : q.hi_exprs) collect_expr(e, out);
}

bool contains_aggregate(const ExprPtr& e) {
  if (!e) return false;
  if (e->is_aggregate_node()) return true;
  // Subqueries aggregate independently.
  if (e->kind == ScalarExpr::Kind::kExists ||
      e->kind == ScalarExpr::Kind::kFirst) {
    return false;
  }
  return contains_aggregate(e->a) || contains_aggregate(e->b) ||
         contains_aggregate(e->c);
}

bool has_aggregates(const std::vector<NamedExpr>& items) {
  return std::any_of(items.begin(), items.end(), [](const NamedExpr& it) {
    return contains_aggregate(it.expr);
  });
}

namespace {

// Rebuild helper; `f` maps each sub-expression (post-order) to a replacement.
template <typename Fn>
ExprPtr map_expr(const ExprPtr& e, Fn&& f) {
  if (!e) return e;
  ExprPtr out = e;
  ExprPtr a = map_expr(e->a, f), b = map_expr(e->b, f), c = map_expr(e->c, f);
  if (a != e->a || b != e->b || c != e->c) {
    auto n = std::make_shared<ScalarExpr>(*e);
    n->a = a;
    n->b = b;
    n->c = c;
    out = n;
  }
  return f(out);
}

}  // namespace

ExprPtr substitute_expr(const ExprPtr& e, const ExprPtr& from,
                        const ExprPtr& to) {
  if (!e) return e;
  if (expr_equal(e, from)) return to;
  if (e->kind == ScalarExpr::Kind::kExists ||
      e->kind == ScalarExpr::Kind::kFirst) {
    return e;  // substitution stops at subquery boundaries
  }
  ExprPtr a = substitute_expr(e->a, from, to);
  ExprPtr b = substitute_expr(e->b, from, to);
  ExprPtr c = substitute_expr(e->c, from, to);
  if (a == e->a && b == e->b && c == e->c) return e;
  auto n = std::make_shared<ScalarExpr>(*e);
  n->a = a;
  n->b = b;
  n->c = c;
  return n;
}

ExprPtr substitute_name(const ExprPtr& e, const Ident& from, const ExprPtr& to) {
  return substitute_expr(e, e_name(from), to);
}

ExprPtr qualify_names(const ExprPtr& e, const std::vector<Ident>& fields,
                      const std::string& scope) {
  return map_expr(e, [&](const ExprPtr& n) -> ExprPtr {
    if (n->kind == ScalarExpr::Kind::kName && !n->name.qualified() &&
        std::find(fields.begin(), fields.end(), n->name) != fields.end()) {
      return e_name(scope, n->name.base);
    }
    return n;
  });
}

namespace {

int fresh_index_of(const std::string& s) {
  if (s.size() < 3 || s[0] != '_' || s[1] != 'g') return 0;
  int v = 0;
  for (size_t i = 2; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') return 0;
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

void max_fresh_walk(const QueryPtr& q, int* best) {
  std::vector<Ident> ids;
  collect_node_idents(*q, &ids);
  for (const auto& id : ids) {
    *best = std::max(*best, fresh_index_of(id.base));
    if (id.scope) *best = std::max(*best, fresh_index_of(*id.scope));
  }
  for (const auto& it : q->items) {
    *best = std::max(*best, fresh_index_of(it.name));
  }
  if (q->kind == QueryExpr::Kind::kAScalar) {
    *best = std::max(*best, fresh_index_of(q->scalar.name));
  }
  if (q->binds_scope()) *best = std::max(*best, fresh_index_of(q->scope));
  for (const auto& c : q->children) max_fresh_walk(c, best);
}

}  // namespace

int max_fresh_index(const QueryPtr& q) {
  int best = 0;
  max_fresh_walk(q, &best);
  return best;
}

// --- Printing ----------------------------------------------------------------

namespace {

// Precedence levels, loosest first: if < or < and < not < comparison <
// additive < multiplicative < primary.
enum Prec {
  kPrecIf = 0,
  kPrecOr = 1,
  kPrecAnd = 2,
  kPrecNot = 3,
  kPrecCmp = 4,
  kPrecAdd = 5,
  kPrecMul = 6,
  kPrecPrimary = 7,
};

int binop_prec(BinOp op) {
  switch (op) {
    case BinOp::kOr: return kPrecOr;
    case BinOp::kAnd: return kPrecAnd;
    case BinOp::kEq:
    case BinOp::kLt:
    case BinOp::kLe:
    case BinOp::kGt:
    case BinOp::kGe: return kPrecCmp;
    case BinOp::kAdd:
    case BinOp::kSub: return kPrecAdd;
    case BinOp::kMul:
    case BinOp::kDiv:
    case BinOp::kMod: return kPrecMul;
  }
  return kPrecPrimary;
}

void print_expr_prec(const ExprPtr& e, int min_prec, std::string* out);

void print_query_compact(const QueryPtr& q, std::string* out);

void print_named(const NamedExpr& it, std::string* out) {
  print_expr_prec(it.expr, kPrecIf, out);
  const ScalarExpr& e = *it.expr;
  bool implicit =
      e.kind == ScalarExpr::Kind::kName && e.name.base == it.name;
  if (!implicit) {
    *out += " as ";
    *out += it.name;
  }
}

void print_expr_prec(const ExprPtr& e, int min_prec, std::string* out) {
  auto parens = [&](int prec, auto&& body) {
    bool need = prec < min_prec;
    if (need) *out += "(";
    body();
    if (need) *out += ")";
  };
  switch (e->kind) {
    case ScalarExpr::Kind::kConst: *out += e->value.to_text(); return;
    case ScalarExpr::Kind::kName: *out += e->name.to_string(); return;
    case ScalarExpr::Kind::kBinop: {
      int p = binop_prec(e->op);
      // Comparisons are non-associative; arithmetic and logic associate left.
      int rhs = binop_is_comparison(e->op) ? p + 1 : p + 1;
      parens(p, [&] {
        print_expr_prec(e->a, p, out);
        *out += " ";
        *out += binop_symbol(e->op);
        *out += " ";
        print_expr_prec(e->b, rhs, out);
      });
      return;
    }
    case ScalarExpr::Kind::kNot:
      parens(kPrecNot, [&] {
        *out += "not ";
        print_expr_prec(e->a, kPrecCmp, out);
      });
      return;
    case ScalarExpr::Kind::kIf:
      parens(kPrecIf, [&] {
        *out += "if ";
        print_expr_prec(e->a, kPrecOr, out);
        *out += " then ";
        print_expr_prec(e->b, kPrecOr, out);
        *out += " else ";
        print_expr_prec(e->c, kPrecIf, out);
      });
      return;
    case ScalarExpr::Kind::kExists:
      *out += "exists(";
      print_query_compact(e->query, out);
      *out += ")";
      return;
    case ScalarExpr::Kind::kFirst:
      *out += "first(";
      print_query_compact(e->query, out);
      *out += ")";
      return;
    case ScalarExpr::Kind::kCount: *out += "count()"; return;
    case ScalarExpr::Kind::kSum:
    case ScalarExpr::Kind::kMin:
    case ScalarExpr::Kind::kMax:
    case ScalarExpr::Kind::kAvg: {
      const char* n = e->kind == ScalarExpr::Kind::kSum   ? "sum"
                      : e->kind == ScalarExpr::Kind::kMin ? "min"
                      : e->kind == ScalarExpr::Kind::kMax ? "max"
                                                          : "avg";
      *out += n;
      *out += "(";
      print_expr_prec(e->a, kPrecIf, out);
      *out += ")";
      return;
    }
  }
}

void print_exprs_maybe_tupled(const std::vector<ExprPtr>& es,
                              std::string* out) {
  if (es.size() == 1) {
    print_expr_prec(es[0], kPrecIf, out);
    return;
  }
  *out += "(";
  for (size_t i = 0; i < es.size(); ++i) {
    if (i) *out += ", ";
    print_expr_prec(es[i], kPrecIf, out);
  }
  *out += ")";
}

void print_query_compact(const QueryPtr& q, std::string* out) {
  switch (q->kind) {
    case QueryExpr::Kind::kRelation: *out += q->relation; return;
    case QueryExpr::Kind::kDedup:
      *out += "dedup(";
      print_query_compact(q->children[0], out);
      *out += ")";
      return;
    case QueryExpr::Kind::kSelect:
    case QueryExpr::Kind::kGroupBy: {
      *out += q->kind == QueryExpr::Kind::kSelect ? "select({" : "groupby({";
      for (size_t i = 0; i < q->items.size(); ++i) {
        if (i) *out += ", ";
        print_named(q->items[i], out);
      }
      *out += "}, ";
      if (q->kind == QueryExpr::Kind::kGroupBy) {
        *out += "[";
        for (size_t i = 0; i < q->keys.size(); ++i) {
          if (i) *out += ", ";
          *out += q->keys[i].to_string();
        }
        *out += "], ";
      }
      print_query_compact(q->children[0], out);
      *out += ")";
      return;
    }
    case QueryExpr::Kind::kFilter:
      *out += "filter(";
      print_expr_prec(q->pred, kPrecIf, out);
      *out += ", ";
      print_query_compact(q->children[0], out);
      *out += ")";
      return;
    case QueryExpr::Kind::kJoin:
      *out += "join(";
      print_expr_prec(q->pred, kPrecIf, out);
      *out += ", ";
      print_query_compact(q->children[0], out);
      *out += ", ";
      print_query_compact(q->children[1], out);
      *out += ")";
      return;
    case QueryExpr::Kind::kOrderBy:
      *out += "orderby([";
      for (size_t i = 0; i < q->sort_keys.size(); ++i) {
        if (i) *out += ", ";
        print_expr_prec(q->sort_keys[i].expr, kPrecIf, out);
        if (q->sort_keys[i].dir == SortDir::kDesc) *out += " desc";
      }
      *out += "], ";
      print_query_compact(q->children[0], out);
      *out += ")";
      return;
    case QueryExpr::Kind::kDepJoin:
    case QueryExpr::Kind::kAList:
      *out += q->kind == QueryExpr::Kind::kDepJoin ? "depjoin(" : "alist(";
      print_query_compact(q->children[0], out);
      *out += " as ";
      *out += q->scope;
      *out += ", ";
      print_query_compact(q->children[1], out);
      *out += ")";
      return;
    case QueryExpr::Kind::kAScalar:
      *out += "ascalar(";
      print_named(q->scalar, out);
      *out += ")";
      return;
    case QueryExpr::Kind::kATuple:
      *out += "atuple([";
      for (size_t i = 0; i < q->children.size(); ++i) {
        if (i) *out += ", ";
        print_query_compact(q->children[i], out);
      }
      *out += "]; ";
      *out += q->tuple_kind == TupleKind::kCross ? "cross" : "concat";
      *out += ")";
      return;
    case QueryExpr::Kind::kAHashIdx:
      *out += "ahashidx(";
      print_query_compact(q->children[0], out);
      *out += " as ";
      *out += q->scope;
      *out += ", ";
      print_query_compact(q->children[1], out);
      *out += ", ";
      print_exprs_maybe_tupled(q->key_exprs, out);
      *out += ")";
      return;
    case QueryExpr::Kind::kAOrderedIdx:
      *out += "aorderedidx(";
      print_query_compact(q->children[0], out);
      *out += " as ";
      *out += q->scope;
      *out += ", ";
      print_query_compact(q->children[1], out);
      *out += ", ";
      print_exprs_maybe_tupled(q->lo_exprs, out);
      *out += ", ";
      print_exprs_maybe_tupled(q->hi_exprs, out);
      *out += ")";
      return;
    case QueryExpr::Kind::kAEmpty: *out += "empty"; return;
  }
}

void pretty(const QueryPtr& q, int indent, std::string* out);

void pretty_child(const QueryPtr& q, int indent, std::string* out) {
  *out += "\n";
  out->append(size_t(indent) * 2, ' ');
  pretty(q, indent, out);
}

void pretty(const QueryPtr& q, int indent, std::string* out) {
  // Leaves and scalar wrappers stay on one line.
  if (q->children.empty()) {
    print_query_compact(q, out);
    return;
  }
  std::string head;
  switch (q->kind) {
    case QueryExpr::Kind::kDedup: head = "dedup("; break;
    case QueryExpr::Kind::kSelect:
    case QueryExpr::Kind::kGroupBy: {
      head = q->kind == QueryExpr::Kind::kSelect ? "select({" : "groupby({";
      for (size_t i = 0; i < q->items.size(); ++i) {
        if (i) head += ", ";
        print_named(q->items[i], &head);
      }
      head += "},";
      if (q->kind == QueryExpr::Kind::kGroupBy) {
        head += " [";
        for (size_t i = 0; i < q->keys.size(); ++i) {
          if (i) head += ", ";
          head += q->keys[i].to_string();
        }
        head += "],";
      }
      break;
    }
    case QueryExpr::Kind::kFilter:
      head = "filter(";
      print_expr_prec(q->pred, kPrecIf, &head);
      head += ",";
      break;
    case QueryExpr::Kind::kJoin:
      head = "join(";
      print_expr_prec(q->pred, kPrecIf, &head);
      head += ",";
      break;
    case QueryExpr::Kind::kOrderBy: {
      head = "orderby([";
      for (size_t i = 0; i < q->sort_keys.size(); ++i) {
        if (i) head += ", ";
        print_expr_prec(q->sort_keys[i].expr, kPrecIf, &head);
        if (q->sort_keys[i].dir == SortDir::kDesc) head += " desc";
      }
      head += "],";
      break;
    }
    case QueryExpr::Kind::kDepJoin: head = "depjoin("; break;
    case QueryExpr::Kind::kAList: head = "alist("; break;
    case QueryExpr::Kind::kATuple: head = "atuple(["; break;
    case QueryExpr::Kind::kAHashIdx: head = "ahashidx("; break;
    case QueryExpr::Kind::kAOrderedIdx: head = "aorderedidx("; break;
    default: print_query_compact(q, out); return;
  }
  *out += head;
  bool scoped_first = q->binds_scope();
  for (size_t i = 0; i < q->children.size(); ++i) {
    if (i) *out += ",";
    pretty_child(q->children[i], indent + 1, out);
    if (i == 0 && scoped_first) {
      *out += " as ";
      *out += q->scope;
    }
  }
  if (q->kind == QueryExpr::Kind::kATuple) {
    *out += "]; ";
    *out += q->tuple_kind == TupleKind::kCross ? "cross" : "concat";
  }
  if (q->kind == QueryExpr::Kind::kAHashIdx) {
    *out += ",\n";
    out->append(size_t(indent + 1) * 2, ' ');
    print_exprs_maybe_tupled(q->key_exprs, out);
  }
  if (q->kind == QueryExpr::Kind::kAOrderedIdx) {
    *out += ",\n";
    out->append(size_t(indent + 1) * 2, ' ');
    print_exprs_maybe_tupled(q->lo_exprs, out);
    *out += ", ";
    print_exprs_maybe_tupled(q->hi_exprs, out);
  }
  *out += ")";
}

}  // namespace

std::string print_expr(const ExprPtr& e) {
  std::string out;
  print_expr_prec(e, kPrecIf, &out);
  return out;
}

std::string print_query(const QueryPtr& q) {
  std::string out;
  print_query_compact(q, &out);
  return out;
}

std::string pretty_query(const QueryPtr& q) {
  std::string out;
  pretty(q, 0, &out);
  return out;
}

}  // namespace strata

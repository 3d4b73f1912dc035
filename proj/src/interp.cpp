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

#include "strata/interp.hpp"

#include <algorithm>

#include "strata/schema.hpp"

namespace strata {

namespace {

const Schema& node_schema(const QueryPtr& q, const EvalContext& ctx) {
  auto it = ctx.caches->schemas.find(q);
  if (it == ctx.caches->schemas.end()) {
    it = ctx.caches->schemas.emplace(q, schema_of(q, ctx.db->catalog)).first;
  }
  return it->second;
}

bool is_closed(const QueryPtr& q, const EvalContext& ctx) {
  auto it = ctx.caches->closed.find(q);
  if (it == ctx.caches->closed.end()) {
    bool closed = free_names(q, ctx.db->catalog).empty();
    it = ctx.caches->closed.emplace(q, closed).first;
  }
  return it->second;
}

bool pred_holds(const ExprPtr& pred, const EvalContext& ctx) {
  Value v = eval_expr(pred, ctx);
  if (v.kind() == ValueKind::kNull) return false;  // unknown drops the tuple
  if (v.kind() != ValueKind::kBool) {
    throw Error("predicate evaluated to a non-boolean: " + v.to_text());
  }
  return v.as_bool();
}

// Comparator wrapping the total value order, for dedup/groupby sets.
struct TupleLess {
  bool operator()(const Tuple& a, const Tuple& b) const {
    return Tuple::compare_total(a, b) < 0;
  }
};

struct ValuesLess {
  bool operator()(const std::vector<Value>& a,
                  const std::vector<Value>& b) const {
    for (size_t i = 0; i < a.size() && i < b.size(); ++i) {
      int c = Value::compare_total(a[i], b[i]);
      if (c != 0) return c < 0;
    }
    return a.size() < b.size();
  }
};

// --- Aggregate folding -------------------------------------------------------

// Evaluates an item expression over a whole relation: aggregate nodes fold
// over the rows, everything else is evaluated on the last row (or null when
// the input is empty).
struct AggEval {
  const Relation& rows;
  const EvalContext& outer;

  Value name_on_last(const ExprPtr& e) {
    if (rows.rows.empty()) {
      // No last tuple; only outer bindings remain visible.
      const Value* v = outer.sigma.find(e->name);
      return v ? *v : Value::null();
    }
    EvalContext c = outer.with_sigma(env_extend(outer.sigma, rows.rows.back()));
    return eval_expr(e, c);
  }

  Value fold_sum(const ExprPtr& arg) {
    Value acc = Value::integer(0);
    for (const auto& t : rows.rows) {
      EvalContext c = outer.with_sigma(env_extend(outer.sigma, t));
      Value v = eval_expr(arg, c);
      if (v.kind() == ValueKind::kNull) continue;
      acc = eval_binop(BinOp::kAdd, acc, v);
    }
    return acc;
  }

  Value fold_minmax(const ExprPtr& arg, bool want_min) {
    Value acc = Value::null();
    for (const auto& t : rows.rows) {
      EvalContext c = outer.with_sigma(env_extend(outer.sigma, t));
      Value v = eval_expr(arg, c);
      if (v.kind() == ValueKind::kNull) continue;
      if (acc.kind() == ValueKind::kNull) {
        acc = v;
      } else {
        int cmp = Value::compare_total(v, acc);
        if (want_min ? cmp < 0 : cmp > 0) acc = v;
      }
    }
    return acc;
  }

  Value fold_avg(const ExprPtr& arg) {
    Value acc = Value::integer(0);
    int64_t n = 0;
    for (const auto& t : rows.rows) {
      EvalContext c = outer.with_sigma(env_extend(outer.sigma, t));
      Value v = eval_expr(arg, c);
      if (v.kind() == ValueKind::kNull) continue;
      acc = eval_binop(BinOp::kAdd, acc, v);
      ++n;
    }
    if (n == 0) return Value::null();
    return eval_binop(BinOp::kDiv, acc, Value::integer(n));
  }

  Value eval(const ExprPtr& e) {
    using EK = ScalarExpr::Kind;
    switch (e->kind) {
      case EK::kCount: return Value::integer(int64_t(rows.rows.size()));
      case EK::kSum: return fold_sum(e->a);
      case EK::kMin: return fold_minmax(e->a, true);
      case EK::kMax: return fold_minmax(e->a, false);
      case EK::kAvg: return fold_avg(e->a);
      case EK::kConst: return e->value;
      case EK::kName: return name_on_last(e);
      case EK::kBinop:
        return eval_binop(e->op, eval(e->a), eval(e->b));
      case EK::kNot: return eval_not(eval(e->a));
      case EK::kIf: {
        Value c = eval(e->a);
        if (c.kind() == ValueKind::kNull) return eval(e->c);
        if (c.kind() != ValueKind::kBool) {
          throw Error("if condition is not a boolean");
        }
        return c.as_bool() ? eval(e->b) : eval(e->c);
      }
      case EK::kExists:
      case EK::kFirst: {
        // Subqueries in an aggregating select see the last tuple, like names.
        EvalContext c =
            rows.rows.empty()
                ? outer
                : outer.with_sigma(env_extend(outer.sigma, rows.rows.back()));
        return eval_expr(e, c);
      }
    }
    throw Error("unhandled expression");
  }
};

}  // namespace

Tuple env_extend(const Tuple& env, const Tuple& row) {
  Tuple out = env;
  for (const auto& [name, value] : row.fields()) out.put(name, value);
  return out;
}

Value eval_expr(const ExprPtr& e, const EvalContext& ctx) {
  using EK = ScalarExpr::Kind;
  switch (e->kind) {
    case EK::kConst: return e->value;
    case EK::kName: {
      const Value* v = ctx.sigma.find(e->name);
      if (!v) throw Error("unbound name '" + e->name.to_string() + "'");
      return *v;
    }
    case EK::kBinop:
      return eval_binop(e->op, eval_expr(e->a, ctx), eval_expr(e->b, ctx));
    case EK::kNot: return eval_not(eval_expr(e->a, ctx));
    case EK::kIf: {
      Value c = eval_expr(e->a, ctx);
      if (c.kind() == ValueKind::kNull) return eval_expr(e->c, ctx);
      if (c.kind() != ValueKind::kBool) {
        throw Error("if condition is not a boolean");
      }
      return c.as_bool() ? eval_expr(e->b, ctx) : eval_expr(e->c, ctx);
    }
    case EK::kExists: {
      Relation r = eval_query(e->query, ctx);
      return Value::boolean(!r.rows.empty());
    }
    case EK::kFirst: {
      Relation r = eval_query(e->query, ctx);
      if (r.rows.empty()) return Value::null();
      if (r.rows[0].fields().empty()) return Value::null();
      return r.rows[0].fields()[0].second;
    }
    case EK::kCount:
    case EK::kSum:
    case EK::kMin:
    case EK::kMax:
    case EK::kAvg:
      throw Error("aggregate used outside select or groupby");
  }
  throw Error("unhandled expression");
}

Relation eval_select(const std::vector<NamedExpr>& items, const Relation& r,
                     const EvalContext& ctx) {
  Relation out;
  for (const auto& it : items) out.schema.push_back(Ident(it.name));
  if (has_aggregates(items)) {
    AggEval agg{r, ctx};
    Tuple row;
    for (const auto& it : items) {
      row.bind(Ident(it.name), agg.eval(it.expr));
    }
    out.rows.push_back(std::move(row));
    return out;
  }
  for (const auto& t : r.rows) {
    EvalContext c = ctx.with_sigma(env_extend(ctx.sigma, t));
    Tuple row;
    for (const auto& it : items) {
      row.bind(Ident(it.name), eval_expr(it.expr, c));
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

Relation eval_groupby(const std::vector<NamedExpr>& items,
                      const std::vector<Ident>& keys, const Relation& r,
                      const EvalContext& ctx) {
  // Partition into groups, keeping first-appearance order.
  std::map<std::vector<Value>, size_t, ValuesLess> index;
  std::vector<Relation> groups;
  for (const auto& t : r.rows) {
    std::vector<Value> key;
    for (const auto& k : keys) {
      const Value* v = t.find(k);
      if (!v) throw Error("groupby key '" + k.to_string() + "' not in tuple");
      key.push_back(*v);
    }
    auto [it, inserted] = index.emplace(std::move(key), groups.size());
    if (inserted) {
      groups.emplace_back();
      groups.back().schema = r.schema;
    }
    groups[it->second].rows.push_back(t);
  }
  Relation out;
  for (const auto& it : items) out.schema.push_back(Ident(it.name));
  for (const auto& g : groups) {
    Relation part = eval_select(items, g, ctx);
    out.rows.insert(out.rows.end(), part.rows.begin(), part.rows.end());
  }
  return out;
}

Relation eval_orderby(const std::vector<SortKey>& keys, const Relation& r,
                      const EvalContext& ctx) {
  struct Keyed {
    std::vector<Value> key;
    size_t index;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(r.rows.size());
  for (size_t i = 0; i < r.rows.size(); ++i) {
    EvalContext c = ctx.with_sigma(env_extend(ctx.sigma, r.rows[i]));
    std::vector<Value> key;
    for (const auto& k : keys) key.push_back(eval_expr(k.expr, c));
    keyed.push_back(Keyed{std::move(key), i});
  }
  std::stable_sort(keyed.begin(), keyed.end(),
                   [&](const Keyed& a, const Keyed& b) {
                     for (size_t i = 0; i < keys.size(); ++i) {
                       int c = Value::compare_total(a.key[i], b.key[i]);
                       if (keys[i].dir == SortDir::kDesc) c = -c;
                       if (c != 0) return c < 0;
                     }
                     return false;  // stable: ties keep input order
                   });
  Relation out;
  out.schema = r.schema;
  for (const auto& k : keyed) out.rows.push_back(r.rows[k.index]);
  return out;
}

Relation eval_dedup(const Relation& r) {
  Relation out;
  out.schema = r.schema;
  std::set<Tuple, TupleLess> seen;
  for (const auto& t : r.rows) {
    if (seen.insert(t).second) out.rows.push_back(t);
  }
  return out;
}

namespace {

// True when every bound comparison holds; a null comparison fails the match,
// mirroring how the desugared filter drops tuples on unknown.
bool key_matches(const Tuple& key, const std::vector<Value>& lookup) {
  for (size_t i = 0; i < lookup.size(); ++i) {
    Value eq = eval_binop(BinOp::kEq, key.fields()[i].second, lookup[i]);
    if (eq.kind() != ValueKind::kBool || !eq.as_bool()) return false;
  }
  return true;
}

bool key_in_range(const Tuple& key, const std::vector<Value>& lo,
                  const std::vector<Value>& hi) {
  for (size_t i = 0; i < lo.size(); ++i) {
    const Value& k = key.fields()[i].second;
    Value ge = eval_binop(BinOp::kLe, lo[i], k);
    Value le = eval_binop(BinOp::kLe, k, hi[i]);
    if (ge.kind() != ValueKind::kBool || !ge.as_bool()) return false;
    if (le.kind() != ValueKind::kBool || !le.as_bool()) return false;
  }
  return true;
}

}  // namespace

Relation eval_query(const QueryPtr& q, const EvalContext& ctx) {
  using K = QueryExpr::Kind;
  // Closed subterms ignore sigma entirely; evaluate them once.
  bool memoizable = q->kind != K::kRelation && q->kind != K::kAEmpty &&
                    is_closed(q, ctx);
  if (memoizable) {
    auto it = ctx.caches->memo.find(q);
    if (it != ctx.caches->memo.end()) return it->second;
  }

  Relation out;
  out.schema = node_schema(q, ctx);
  switch (q->kind) {
    case K::kRelation: {
      const Relation& r = ctx.db->require(q->relation);
      out.rows = r.rows;
      break;
    }
    case K::kAEmpty: break;
    case K::kDedup:
      out.rows = eval_dedup(eval_query(q->children[0], ctx)).rows;
      break;
    case K::kFilter: {
      Relation in = eval_query(q->children[0], ctx);
      for (auto& t : in.rows) {
        EvalContext c = ctx.with_sigma(env_extend(ctx.sigma, t));
        if (pred_holds(q->pred, c)) out.rows.push_back(std::move(t));
      }
      break;
    }
    case K::kSelect:
      out.rows =
          eval_select(q->items, eval_query(q->children[0], ctx), ctx).rows;
      break;
    case K::kGroupBy:
      out.rows = eval_groupby(q->items, q->keys,
                              eval_query(q->children[0], ctx), ctx)
                     .rows;
      break;
    case K::kOrderBy:
      out.rows =
          eval_orderby(q->sort_keys, eval_query(q->children[0], ctx), ctx)
              .rows;
      break;
    case K::kJoin: {
      Relation lhs = eval_query(q->children[0], ctx);
      Relation rhs = eval_query(q->children[1], ctx);
      for (const auto& a : lhs.rows) {
        for (const auto& b : rhs.rows) {
          Tuple merged = Tuple::disjoint_union(a, b);
          EvalContext c = ctx.with_sigma(env_extend(ctx.sigma, merged));
          if (pred_holds(q->pred, c)) out.rows.push_back(std::move(merged));
        }
      }
      break;
    }
    case K::kDepJoin:
    case K::kAList: {
      Relation lhs = eval_query(q->children[0], ctx);
      for (const auto& t : lhs.rows) {
        EvalContext c =
            ctx.with_sigma(env_extend(ctx.sigma, t.scoped(q->scope)));
        Relation rhs = eval_query(q->children[1], c);
        out.rows.insert(out.rows.end(), rhs.rows.begin(), rhs.rows.end());
      }
      break;
    }
    case K::kAScalar: {
      Tuple row;
      row.bind(Ident(q->scalar.name), eval_expr(q->scalar.expr, ctx));
      out.rows.push_back(std::move(row));
      break;
    }
    case K::kATuple: {
      if (q->tuple_kind == TupleKind::kConcat) {
        for (const auto& c : q->children) {
          Relation r = eval_query(c, ctx);
          out.rows.insert(out.rows.end(), r.rows.begin(), r.rows.end());
        }
        break;
      }
      // cross: evaluate the arms independently, then merge all combinations
      // left-outermost.
      std::vector<Tuple> acc = {Tuple{}};
      for (const auto& c : q->children) {
        Relation r = eval_query(c, ctx);
        std::vector<Tuple> next;
        for (const auto& a : acc) {
          for (const auto& b : r.rows) {
            next.push_back(Tuple::disjoint_union(a, b));
          }
        }
        acc = std::move(next);
      }
      out.rows = std::move(acc);
      break;
    }
    case K::kAHashIdx: {
      Relation keys = eval_query(q->children[0], ctx);
      if (keys.schema.size() != q->key_exprs.size()) {
        throw Error("hash index lookup arity mismatch: index has " +
                    std::to_string(keys.schema.size()) + " key columns");
      }
      std::vector<Value> lookup;
      for (const auto& e : q->key_exprs) lookup.push_back(eval_expr(e, ctx));
      for (const auto& t : keys.rows) {
        if (!key_matches(t, lookup)) continue;
        EvalContext c =
            ctx.with_sigma(env_extend(ctx.sigma, t.scoped(q->scope)));
        Relation rhs = eval_query(q->children[1], c);
        out.rows.insert(out.rows.end(), rhs.rows.begin(), rhs.rows.end());
      }
      break;
    }
    case K::kAOrderedIdx: {
      Relation keys = eval_query(q->children[0], ctx);
      if (keys.schema.size() != q->lo_exprs.size() ||
          keys.schema.size() != q->hi_exprs.size()) {
        throw Error("ordered index bound arity mismatch: index has " +
                    std::to_string(keys.schema.size()) + " key columns");
      }
      std::vector<Value> lo, hi;
      for (const auto& e : q->lo_exprs) lo.push_back(eval_expr(e, ctx));
      for (const auto& e : q->hi_exprs) hi.push_back(eval_expr(e, ctx));
      for (const auto& t : keys.rows) {
        if (!key_in_range(t, lo, hi)) continue;
        EvalContext c =
            ctx.with_sigma(env_extend(ctx.sigma, t.scoped(q->scope)));
        Relation rhs = eval_query(q->children[1], c);
        out.rows.insert(out.rows.end(), rhs.rows.begin(), rhs.rows.end());
      }
      break;
    }
  }

  if (memoizable) ctx.caches->memo.emplace(q, out);
  return out;
}

}  // namespace strata

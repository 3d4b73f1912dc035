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

#include "strata/schema.hpp"

#include <algorithm>

namespace strata {

namespace {

void require_distinct(const Schema& s, const std::string& where) {
  std::set<std::string> seen;
  for (const auto& id : s) {
    if (!seen.insert(id.to_string()).second) {
      throw Error(where + " produces duplicate field '" + id.to_string() + "'");
    }
  }
}

Schema item_names(const std::vector<NamedExpr>& items) {
  Schema out;
  for (const auto& it : items) out.push_back(Ident(it.name));
  return out;
}

// Idents of the expression itself, not of nested subqueries.
void collect_shallow_idents(const ExprPtr& e, std::vector<Ident>* out) {
  using EK = ScalarExpr::Kind;
  switch (e->kind) {
    case EK::kName: out->push_back(e->name); break;
    case EK::kBinop:
      collect_shallow_idents(e->a, out);
      collect_shallow_idents(e->b, out);
      break;
    case EK::kNot: collect_shallow_idents(e->a, out); break;
    case EK::kIf:
      collect_shallow_idents(e->a, out);
      collect_shallow_idents(e->b, out);
      collect_shallow_idents(e->c, out);
      break;
    case EK::kSum:
    case EK::kMin:
    case EK::kMax:
    case EK::kAvg: collect_shallow_idents(e->a, out); break;
    case EK::kConst:
    case EK::kCount:
    case EK::kExists:
    case EK::kFirst: break;
  }
}

}  // namespace

Schema schema_of(const QueryPtr& q, const Catalog& cat) {
  using K = QueryExpr::Kind;
  switch (q->kind) {
    case K::kRelation: {
      const RelationDecl& decl = cat.require(q->relation);
      Schema out;
      for (const auto& col : decl.columns) out.push_back(Ident(col.name));
      return out;
    }
    case K::kDedup:
    case K::kFilter:
    case K::kOrderBy: return schema_of(q->children[0], cat);
    case K::kSelect:
    case K::kGroupBy: return item_names(q->items);
    case K::kJoin: {
      Schema out = schema_of(q->children[0], cat);
      Schema rhs = schema_of(q->children[1], cat);
      out.insert(out.end(), rhs.begin(), rhs.end());
      return out;
    }
    case K::kDepJoin:
    case K::kAList:
    case K::kAHashIdx:
    case K::kAOrderedIdx: return schema_of(q->children[1], cat);
    case K::kAScalar: return {Ident(q->scalar.name)};
    case K::kATuple: {
      if (q->children.empty()) return {};
      if (q->tuple_kind == TupleKind::kConcat) {
        Schema first = schema_of(q->children[0], cat);
        for (size_t i = 1; i < q->children.size(); ++i) {
          if (!(schema_of(q->children[i], cat) == first)) {
            throw Error("concat tuple arms have different schemas");
          }
        }
        return first;
      }
      Schema out;
      for (const auto& c : q->children) {
        Schema s = schema_of(c, cat);
        out.insert(out.end(), s.begin(), s.end());
      }
      return out;
    }
    case K::kAEmpty: return {};
  }
  throw Error("schema_of: unhandled node");
}

// --- Name resolution ---------------------------------------------------------

namespace {

// Environment for name checking: binder scopes (each a set of field bases)
// plus the unqualified row context inherited from enclosing expressions.
struct NameEnv {
  std::map<std::string, std::set<std::string>> scopes;
  std::set<std::string> row;
};

struct NameChecker {
  const Catalog& cat;

  std::set<std::string> bases(const Schema& s) {
    std::set<std::string> out;
    for (const auto& id : s) out.insert(id.base);
    return out;
  }

  void check_ident(const Ident& id, const std::set<std::string>& local,
                   const NameEnv& env) {
    if (id.is_param()) return;
    if (id.qualified()) {
      auto it = env.scopes.find(*id.scope);
      if (it == env.scopes.end()) {
        throw Error("unbound scope '" + *id.scope + "' in '" + id.to_string() +
                    "'");
      }
      if (!it->second.count(id.base)) {
        throw Error("scope '" + *id.scope + "' has no field '" + id.base + "'");
      }
      return;
    }
    if (!local.count(id.base) && !env.row.count(id.base)) {
      throw Error("unbound name '" + id.base + "'");
    }
  }

  void check_expr(const ExprPtr& e, const std::set<std::string>& local,
                  const NameEnv& env) {
    std::vector<Ident> ids;
    collect_shallow_idents(e, &ids);
    for (const auto& id : ids) check_ident(id, local, env);
    std::vector<QueryPtr> subs;
    collect_expr_subqueries(e, &subs);
    NameEnv sub_env = env;
    sub_env.row.insert(local.begin(), local.end());
    for (const auto& s : subs) walk(s, sub_env);
  }

  void walk(const QueryPtr& q, const NameEnv& env) {
    using K = QueryExpr::Kind;
    switch (q->kind) {
      case K::kRelation:
        cat.require(q->relation);
        return;
      case K::kAEmpty: return;
      case K::kDedup: walk(q->children[0], env); return;
      case K::kFilter: {
        walk(q->children[0], env);
        check_expr(q->pred, bases(schema_of(q->children[0], cat)), env);
        return;
      }
      case K::kOrderBy: {
        walk(q->children[0], env);
        std::set<std::string> local = bases(schema_of(q->children[0], cat));
        for (const auto& k : q->sort_keys) check_expr(k.expr, local, env);
        return;
      }
      case K::kSelect:
      case K::kGroupBy: {
        walk(q->children[0], env);
        std::set<std::string> local = bases(schema_of(q->children[0], cat));
        for (const auto& it : q->items) check_expr(it.expr, local, env);
        require_distinct(item_names(q->items),
                         q->kind == K::kSelect ? "select" : "groupby");
        for (const auto& k : q->keys) {
          if (k.qualified() || !local.count(k.base)) {
            throw Error("groupby key '" + k.to_string() +
                        "' is not a field of its input");
          }
        }
        return;
      }
      case K::kJoin: {
        walk(q->children[0], env);
        walk(q->children[1], env);
        Schema s = schema_of(q, cat);
        require_distinct(s, "join");
        check_expr(q->pred, bases(s), env);
        return;
      }
      case K::kDepJoin:
      case K::kAList:
      case K::kAHashIdx:
      case K::kAOrderedIdx: {
        walk(q->children[0], env);
        for (const auto& e : q->key_exprs) {
          check_expr(e, {}, env);
        }
        for (const auto& e : q->lo_exprs) check_expr(e, {}, env);
        for (const auto& e : q->hi_exprs) check_expr(e, {}, env);
        NameEnv inner = env;
        inner.scopes[q->scope] = bases(schema_of(q->children[0], cat));
        walk(q->children[1], inner);
        return;
      }
      case K::kAScalar:
        check_expr(q->scalar.expr, {}, env);
        return;
      case K::kATuple: {
        for (const auto& c : q->children) walk(c, env);
        if (q->tuple_kind == TupleKind::kCross) {
          require_distinct(schema_of(q, cat), "cross tuple");
        } else {
          schema_of(q, cat);  // validates matching arms
        }
        return;
      }
    }
  }
};

}  // namespace

void check_names(const QueryPtr& q, const Catalog& cat) {
  NameChecker checker{cat};
  checker.walk(q, NameEnv{});
}

// --- Free names --------------------------------------------------------------

namespace {

struct FreeNames {
  const Catalog& cat;
  std::set<Ident> out;

  std::set<std::string> bases(const Schema& s) {
    std::set<std::string> r;
    for (const auto& id : s) r.insert(id.base);
    return r;
  }

  void visit_expr(const ExprPtr& e, const std::set<std::string>& local,
                  const std::map<std::string, std::set<std::string>>& scopes) {
    std::vector<Ident> ids;
    collect_shallow_idents(e, &ids);
    for (const auto& id : ids) {
      if (id.is_param()) {
        out.insert(id);
      } else if (id.qualified()) {
        if (!scopes.count(*id.scope)) out.insert(id);
      } else if (!local.count(id.base)) {
        out.insert(id);
      }
    }
    std::vector<QueryPtr> subs;
    collect_expr_subqueries(e, &subs);
    for (const auto& s : subs) walk(s, local, scopes);
  }

  void walk(const QueryPtr& q, std::set<std::string> row,
            std::map<std::string, std::set<std::string>> scopes) {
    using K = QueryExpr::Kind;
    switch (q->kind) {
      case K::kRelation:
      case K::kAEmpty: return;
      case K::kDedup: walk(q->children[0], row, scopes); return;
      case K::kFilter:
      case K::kOrderBy:
      case K::kSelect:
      case K::kGroupBy: {
        walk(q->children[0], row, scopes);
        std::set<std::string> local = bases(schema_of(q->children[0], cat));
        local.insert(row.begin(), row.end());
        std::vector<ExprPtr> es;
        collect_node_exprs(*q, &es);
        for (const auto& e : es) visit_expr(e, local, scopes);
        for (const auto& k : q->keys) {
          if (!k.qualified() && !local.count(k.base)) out.insert(k);
        }
        return;
      }
      case K::kJoin: {
        walk(q->children[0], row, scopes);
        walk(q->children[1], row, scopes);
        std::set<std::string> local = bases(schema_of(q, cat));
        local.insert(row.begin(), row.end());
        visit_expr(q->pred, local, scopes);
        return;
      }
      case K::kDepJoin:
      case K::kAList:
      case K::kAHashIdx:
      case K::kAOrderedIdx: {
        walk(q->children[0], row, scopes);
        std::vector<ExprPtr> bounds;
        bounds.insert(bounds.end(), q->key_exprs.begin(), q->key_exprs.end());
        bounds.insert(bounds.end(), q->lo_exprs.begin(), q->lo_exprs.end());
        bounds.insert(bounds.end(), q->hi_exprs.begin(), q->hi_exprs.end());
        for (const auto& e : bounds) visit_expr(e, row, scopes);
        auto inner = scopes;
        inner[q->scope] = bases(schema_of(q->children[0], cat));
        walk(q->children[1], row, inner);
        return;
      }
      case K::kAScalar: visit_expr(q->scalar.expr, row, scopes); return;
      case K::kATuple:
        for (const auto& c : q->children) walk(c, row, scopes);
        return;
    }
  }
};

}  // namespace

std::set<Ident> free_names(const QueryPtr& q, const Catalog& cat) {
  FreeNames fn{cat, {}};
  fn.walk(q, {}, {});
  return std::move(fn.out);
}

std::set<Ident> free_names(const ExprPtr& e, const Catalog& cat) {
  FreeNames fn{cat, {}};
  fn.visit_expr(e, {}, {});
  return std::move(fn.out);
}

// --- Staging -----------------------------------------------------------------

std::string StagingReport::to_string() const {
  if (serializable()) return "serializable\n";
  std::string out;
  for (const auto& v : violations) {
    out += path_to_string(v.path) + ": " + v.message + "\n";
  }
  return out;
}

namespace {

using StageSchema = std::vector<std::pair<Ident, Stage>>;

struct StageChecker {
  const Catalog& cat;
  const std::set<Ident>& params;
  std::vector<StagingViolation>* out;

  bool is_parameter(const Ident& id) const {
    return id.is_param() || params.count(id) > 0;
  }

  void report(const Path& path, std::string msg) {
    out->push_back(StagingViolation{path, std::move(msg)});
  }

  static std::string use_msg(const std::string& name, Stage bound, Stage use) {
    return "name '" + name + "' is bound at " + stage_name(bound) +
           " but used in a " + stage_name(use) + " context";
  }

  // Resolves one identifier use at stage `use`.
  void check_ident(const Ident& id, Stage use, const StageSchema& local,
                   const std::map<std::string, Stage>& row,
                   const std::map<std::string, Stage>& scopes,
                   const Path& path) {
    if (is_parameter(id)) {
      if (use == Stage::kCompile) {
        report(path, "parameter '" + id.to_string() +
                         "' is bound at run time but used in a compile-time "
                         "context");
      }
      return;
    }
    if (id.qualified()) {
      auto it = scopes.find(*id.scope);
      if (it == scopes.end()) {
        report(path, "unbound scope '" + *id.scope + "'");
      } else if (it->second != use) {
        report(path, use_msg(id.to_string(), it->second, use));
      }
      return;
    }
    for (const auto& [name, stage] : local) {
      if (name.base == id.base) {
        if (stage != use) report(path, use_msg(id.base, stage, use));
        return;
      }
    }
    auto it = row.find(id.base);
    if (it == row.end()) {
      report(path, "unbound name '" + id.base + "'");
    } else if (it->second != use) {
      report(path, use_msg(id.base, it->second, use));
    }
  }

  void check_expr(const ExprPtr& e, Stage use, const StageSchema& local,
                  const std::map<std::string, Stage>& row,
                  const std::map<std::string, Stage>& scopes,
                  const Path& path) {
    std::vector<Ident> ids;
    collect_shallow_idents(e, &ids);
    for (const auto& id : ids) check_ident(id, use, local, row, scopes, path);
    std::vector<QueryPtr> subs;
    collect_expr_subqueries(e, &subs);
    if (subs.empty()) return;
    std::map<std::string, Stage> sub_row = row;
    for (const auto& [name, stage] : local) sub_row[name.base] = stage;
    for (const auto& s : subs) walk(s, use, sub_row, scopes, path);
  }

  StageSchema bind_all(const Schema& s, Stage stage) {
    StageSchema out;
    for (const auto& id : s) out.emplace_back(id, stage);
    return out;
  }

  StageSchema walk(const QueryPtr& q, Stage ctx,
                   const std::map<std::string, Stage>& row,
                   const std::map<std::string, Stage>& scopes, Path path) {
    using K = QueryExpr::Kind;
    auto child = [&](int i, Stage s,
                     const std::map<std::string, Stage>& sc) -> StageSchema {
      Path p = path;
      p.push_back(i);
      return walk(q->children[i], s, row, sc, std::move(p));
    };
    switch (q->kind) {
      case K::kRelation: {
        const RelationDecl* decl = cat.find(q->relation);
        if (!decl) {
          report(path, "unknown relation '" + q->relation + "'");
          return {};
        }
        Schema s;
        for (const auto& c : decl->columns) s.push_back(Ident(c.name));
        if (ctx == Stage::kRun) {
          report(path, "relation '" + q->relation +
                           "' is scanned in a run-time context");
          // Bind the columns at run time so the scan is reported once
          // instead of once per field use.
          return bind_all(s, Stage::kRun);
        }
        return bind_all(s, Stage::kCompile);
      }
      case K::kAEmpty: return {};
      case K::kDedup: {
        if (ctx == Stage::kRun) {
          report(path, "'dedup' is not supported in a run-time context");
        }
        return child(0, ctx, scopes);
      }
      case K::kFilter: {
        StageSchema in = child(0, ctx, scopes);
        check_expr(q->pred, ctx, in, row, scopes, path);
        return in;
      }
      case K::kOrderBy: {
        if (ctx == Stage::kRun) {
          report(path, "'orderby' is not supported in a run-time context");
        }
        StageSchema in = child(0, ctx, scopes);
        for (const auto& k : q->sort_keys) {
          check_expr(k.expr, ctx, in, row, scopes, path);
        }
        return in;
      }
      case K::kSelect:
      case K::kGroupBy: {
        if (q->kind == K::kGroupBy && ctx == Stage::kRun) {
          report(path, "'groupby' is not supported in a run-time context");
        }
        StageSchema in = child(0, ctx, scopes);
        for (const auto& it : q->items) {
          check_expr(it.expr, ctx, in, row, scopes, path);
        }
        for (const auto& k : q->keys) {
          check_ident(k, ctx, in, row, scopes, path);
        }
        StageSchema outs;
        for (const auto& it : q->items) outs.emplace_back(Ident(it.name), ctx);
        return outs;
      }
      case K::kJoin: {
        if (ctx == Stage::kRun) {
          report(path, "'join' is not supported in a run-time context");
        }
        StageSchema in = child(0, ctx, scopes);
        StageSchema rhs = child(1, ctx, scopes);
        in.insert(in.end(), rhs.begin(), rhs.end());
        check_expr(q->pred, ctx, in, row, scopes, path);
        return in;
      }
      case K::kDepJoin: {
        child(0, ctx, scopes);
        auto inner = scopes;
        inner[q->scope] = ctx;  // the binder lives at the depjoin's own stage
        return child(1, ctx, inner);
      }
      case K::kAList:
      case K::kAHashIdx:
      case K::kAOrderedIdx: {
        child(0, Stage::kCompile, scopes);
        // Lookup bounds are evaluated where the index is read; the binder is
        // not visible to them.
        for (const auto& e : q->key_exprs) {
          check_expr(e, ctx, {}, row, scopes, path);
        }
        for (const auto& e : q->lo_exprs) {
          check_expr(e, ctx, {}, row, scopes, path);
        }
        for (const auto& e : q->hi_exprs) {
          check_expr(e, ctx, {}, row, scopes, path);
        }
        auto inner = scopes;
        inner[q->scope] = Stage::kCompile;  // key rows exist at compile time
        return child(1, ctx, inner);
      }
      case K::kAScalar: {
        check_expr(q->scalar.expr, Stage::kCompile, {}, row, scopes, path);
        return {{Ident(q->scalar.name), ctx}};
      }
      case K::kATuple: {
        std::vector<StageSchema> arms;
        for (size_t i = 0; i < q->children.size(); ++i) {
          arms.push_back(child(int(i), ctx, scopes));
        }
        if (q->tuple_kind == TupleKind::kConcat) {
          return arms.empty() ? StageSchema{} : arms[0];
        }
        StageSchema out;
        for (const auto& a : arms) out.insert(out.end(), a.begin(), a.end());
        return out;
      }
    }
    return {};
  }
};

}  // namespace

StagingReport stage_check(const QueryPtr& q, const Catalog& cat,
                          const std::set<Ident>& params) {
  StagingReport report;
  StageChecker checker{cat, params, &report.violations};
  checker.walk(q, Stage::kRun, {}, {}, Path{});
  return report;
}

Stage context_stage(const QueryPtr& root, const Path& path) {
  Stage stage = Stage::kRun;
  QueryPtr q = root;
  for (int step : path) {
    if (step < 0 || size_t(step) >= q->children.size()) {
      throw Error("path " + path_to_string(path) + " does not exist");
    }
    if (q->is_layout_op() && q->binds_scope() && step == 0) {
      stage = Stage::kCompile;
    }
    q = q->children[step];
  }
  return stage;
}

std::map<std::string, Stage> binder_stages(const QueryPtr& root,
                                           const Path& path) {
  std::map<std::string, Stage> out;
  Stage stage = Stage::kRun;
  QueryPtr q = root;
  for (int step : path) {
    if (step < 0 || size_t(step) >= q->children.size()) {
      throw Error("path " + path_to_string(path) + " does not exist");
    }
    if (q->binds_scope() && step == 1) {
      out[q->scope] = q->is_layout_op() ? Stage::kCompile : stage;
    }
    if (q->is_layout_op() && q->binds_scope() && step == 0) {
      stage = Stage::kCompile;
    }
    q = q->children[step];
  }
  return out;
}

}  // namespace strata

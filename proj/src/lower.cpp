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

// Reader generation.
//
// Each run-time node of the query becomes one iterator named after its path
// ("rd" for the root, "rd_1_0" for the node at /1/0).  A reader's parameters
// are the byte offset of its node instance, every query parameter, and one
// row tuple per enclosing run-time depjoin binder; the entry iterator "main"
// takes just the query parameters and starts the root reader at offset zero.
//
// The geometry baked into the generated code — scalar widths, elided
// headers, bucket counts, slot and offset widths — is derived from the same
// layout type the serializer used, so reader and writer agree on every byte
// by construction.  Aggregates compile to accumulators that mirror the
// reference evaluator's folds (count sees every row, sum starts at integer
// zero and skips nulls, min/max and avg skip nulls, avg of nothing is null),
// and non-aggregate expressions in an aggregate select read the last row via
// holder variables that fall back to the enclosing bindings, or null, when
// the child produced no rows.

#include "strata/lower.hpp"

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "strata/schema.hpp"

namespace strata {
namespace {

using QK = QueryExpr::Kind;
using EK = ScalarExpr::Kind;

// --- Construction shorthand --------------------------------------------------

IRExprPtr op2(IROp op, IRExprPtr a, IRExprPtr b) {
  return ir_op(op, {std::move(a), std::move(b)});
}

IRExprPtr iadd(IRExprPtr a, IRExprPtr b) {
  return op2(IROp::kAdd, std::move(a), std::move(b));
}

IRExprPtr iadd(IRExprPtr a, int64_t k) {
  if (k == 0) return a;
  return iadd(std::move(a), ir_int(k));
}

IRExprPtr imul(IRExprPtr a, int64_t k) {
  return op2(IROp::kMul, std::move(a), ir_int(k));
}

// Little-endian sign-extending integer read of `width` bytes at `pos`.
IRExprPtr toint_at(IRExprPtr pos, int width) {
  return ir_op(IROp::kToInt, {ir_slice(std::move(pos), ir_int(width))});
}

IRExprPtr null_const(IRType t) {
  return ir_const(VmVal::of(Value::null()), std::move(t));
}

IRExprPtr and_chain(std::vector<IRExprPtr> es) {
  if (es.empty()) return ir_bool(true);
  IRExprPtr acc = std::move(es[0]);
  for (size_t i = 1; i < es.size(); ++i) {
    acc = op2(IROp::kAnd, std::move(acc), std::move(es[i]));
  }
  return acc;
}

IROp binop_ir(BinOp op) {
  switch (op) {
    case BinOp::kAdd: return IROp::kAdd;
    case BinOp::kSub: return IROp::kSub;
    case BinOp::kMul: return IROp::kMul;
    case BinOp::kDiv: return IROp::kDiv;
    case BinOp::kMod: return IROp::kMod;
    case BinOp::kEq: return IROp::kEq;
    case BinOp::kLt: return IROp::kLt;
    case BinOp::kLe: return IROp::kLe;
    case BinOp::kGt: return IROp::kGt;
    case BinOp::kGe: return IROp::kGe;
    case BinOp::kAnd: return IROp::kAnd;
    case BinOp::kOr: return IROp::kOr;
  }
  throw LoweringError("unknown binary operator");
}

// --- Column-kind inference ---------------------------------------------------
//
// The IR is typed coarsely (int-like, bool, bytes, tuples), but the generated
// code still needs the value kind of a column in a few places: to annotate
// null constants, to initialize aggregate accumulators, and to declare the
// kinds of query parameters in the plan's manifest.  This little analysis
// mirrors schema_of, propagating (kind, scale) instead of names.

struct ColInfo {
  ValueKind kind = ValueKind::kInt;
  int scale = 0;
};

using KindEnv = std::map<Ident, ColInfo>;

IRType coarse(const ColInfo& c) {
  switch (c.kind) {
    case ValueKind::kBool: return IRType::boolean();
    case ValueKind::kString: return IRType::bytes();
    default: return IRType::integer();
  }
}

ColInfo layout_col_info(const LayoutTypePtr& col) {
  switch (col->kind) {
    case LayoutKind::kBool: return {ValueKind::kBool, 0};
    case LayoutKind::kString: return {ValueKind::kString, 0};
    case LayoutKind::kFixed: return {ValueKind::kFixed, col->scale};
    case LayoutKind::kDate: return {ValueKind::kDate, 0};
    default: return {ValueKind::kInt, 0};
  }
}

bool is_null_lit(const ExprPtr& e) {
  return e->kind == EK::kConst && e->value.is_null();
}

class Kinds {
 public:
  explicit Kinds(const Catalog& cat) : cat_(cat) {}

  ColInfo info(const ExprPtr& e, const KindEnv& env) const {
    switch (e->kind) {
      case EK::kConst: {
        const Value& v = e->value;
        if (v.is_null()) return {ValueKind::kInt, 0};
        return {v.kind(), v.kind() == ValueKind::kFixed ? v.scale() : 0};
      }
      case EK::kName: {
        auto it = env.find(e->name);
        return it != env.end() ? it->second : ColInfo{};
      }
      case EK::kBinop: {
        if (binop_is_comparison(e->op) || e->op == BinOp::kAnd ||
            e->op == BinOp::kOr) {
          return {ValueKind::kBool, 0};
        }
        ColInfo a = info(e->a, env), b = info(e->b, env);
        if (a.kind == ValueKind::kFixed || b.kind == ValueKind::kFixed) {
          int sa = a.kind == ValueKind::kFixed ? a.scale : 0;
          int sb = b.kind == ValueKind::kFixed ? b.scale : 0;
          return {ValueKind::kFixed, sa > sb ? sa : sb};
        }
        if (a.kind == ValueKind::kDate || b.kind == ValueKind::kDate) {
          return {ValueKind::kDate, 0};
        }
        return {ValueKind::kInt, 0};
      }
      case EK::kNot:
      case EK::kExists:
        return {ValueKind::kBool, 0};
      case EK::kIf:
        return is_null_lit(e->b) ? info(e->c, env) : info(e->b, env);
      case EK::kFirst: {
        auto cols = cols_of(e->query, env);
        return cols.empty() ? ColInfo{} : cols[0];
      }
      case EK::kCount:
        return {ValueKind::kInt, 0};
      case EK::kSum:
      case EK::kMin:
      case EK::kMax:
      case EK::kAvg:
        return info(e->a, env);
    }
    return {};
  }

  std::vector<ColInfo> cols_of(const QueryPtr& q, const KindEnv& ambient) const {
    switch (q->kind) {
      case QK::kRelation: {
        std::vector<ColInfo> out;
        for (const ColumnDecl& c : cat_.require(q->relation).columns) {
          out.push_back({c.kind, c.scale});
        }
        return out;
      }
      case QK::kDedup:
      case QK::kFilter:
      case QK::kOrderBy:
        return cols_of(q->children[0], ambient);
      case QK::kSelect:
      case QK::kGroupBy: {
        KindEnv env = extend_rows(ambient, q->children[0]);
        std::vector<ColInfo> out;
        for (const NamedExpr& it : q->items) out.push_back(info(it.expr, env));
        return out;
      }
      case QK::kJoin: {
        std::vector<ColInfo> out = cols_of(q->children[0], ambient);
        std::vector<ColInfo> r = cols_of(q->children[1], ambient);
        out.insert(out.end(), r.begin(), r.end());
        return out;
      }
      case QK::kDepJoin:
      case QK::kAList:
      case QK::kAHashIdx:
      case QK::kAOrderedIdx:
        return cols_of(q->children[1],
                       extend_scoped(ambient, q->children[0], q->scope));
      case QK::kAScalar:
        return {info(q->scalar.expr, ambient)};
      case QK::kATuple: {
        if (q->children.empty()) return {};
        if (q->tuple_kind == TupleKind::kConcat) {
          return cols_of(q->children[0], ambient);
        }
        std::vector<ColInfo> out;
        for (const QueryPtr& c : q->children) {
          std::vector<ColInfo> ci = cols_of(c, ambient);
          out.insert(out.end(), ci.begin(), ci.end());
        }
        return out;
      }
      case QK::kAEmpty:
        return {};
    }
    throw LoweringError("unhandled operator in column-kind inference");
  }

  // `ambient` plus the output columns of `child` under their own names.
  KindEnv extend_rows(const KindEnv& ambient, const QueryPtr& child) const {
    KindEnv env = ambient;
    Schema s = schema_of(child, cat_);
    std::vector<ColInfo> cols = cols_of(child, ambient);
    for (size_t i = 0; i < s.size() && i < cols.size(); ++i) env[s[i]] = cols[i];
    return env;
  }

  // `ambient` plus the columns of `left` qualified by a binder scope.
  KindEnv extend_scoped(const KindEnv& ambient, const QueryPtr& left,
                        const std::string& scope) const {
    KindEnv env = ambient;
    Schema s = schema_of(left, cat_);
    std::vector<ColInfo> cols = cols_of(left, ambient);
    for (size_t i = 0; i < s.size() && i < cols.size(); ++i) {
      env[Ident(scope, s[i].base)] = cols[i];
    }
    return env;
  }

 private:
  const Catalog& cat_;
};

// --- Aggregate extraction ----------------------------------------------------

Ident marker_ident(size_t k) { return Ident("#agg" + std::to_string(k)); }

bool is_marker(const Ident& id) {
  return !id.scope && id.base.rfind("#agg", 0) == 0;
}

// Replaces each aggregate subterm by a marker name and collects the
// aggregates in order; the residual expression is evaluated over the final
// accumulator values.
ExprPtr extract_aggs(const ExprPtr& e, std::vector<ExprPtr>* aggs) {
  switch (e->kind) {
    case EK::kCount:
    case EK::kSum:
    case EK::kMin:
    case EK::kMax:
    case EK::kAvg:
      aggs->push_back(e);
      return e_name(marker_ident(aggs->size() - 1));
    case EK::kBinop:
      return e_binop(e->op, extract_aggs(e->a, aggs), extract_aggs(e->b, aggs));
    case EK::kNot:
      return e_not(extract_aggs(e->a, aggs));
    case EK::kIf:
      return e_if(extract_aggs(e->a, aggs), extract_aggs(e->b, aggs),
                  extract_aggs(e->c, aggs));
    default:
      return e;
  }
}

// --- The generator -----------------------------------------------------------

using Env = std::map<Ident, IRExprPtr>;

// Per-iterator build state: a fresh-variable counter keeps generated locals
// ("r0", "pos3", ...) distinct from the fixed parameter names.
struct Emit {
  std::vector<std::string> params;
  int fresh = 0;

  std::string fresh_var(const char* prefix) {
    return std::string(prefix) + std::to_string(fresh++);
  }
};

class Lowerer {
 public:
  Lowerer(const QueryPtr& q, const Catalog& cat, const TypedLayout& typed)
      : root_(q), cat_(cat), typed_(typed), kinds_(cat) {}

  LoweredPlan run() {
    Schema schema = schema_of(root_, cat_);
    scan_query(root_, Path{}, KindEnv{});

    KindEnv ambient;
    for (size_t i = 0; i < param_idents_.size(); ++i) {
      ambient[param_idents_[i]] = {param_decls_[i].kind, param_decls_[i].scale};
    }
    std::string root_iter = gen(root_, Path{}, {}, ambient);

    Emit em;
    em.params = param_vars_;
    std::vector<IRStmtPtr> body;
    std::vector<IRExprPtr> args = {ir_int(0)};
    for (const std::string& pv : param_vars_) args.push_back(ir_var(pv));
    drain(em, body, root_iter, std::move(args), [&](const std::string& r) {
      return std::vector<IRStmtPtr>{ir_yield(ir_var(r))};
    });
    iters_.push_back(IRIterator{"main", em.params, ir_seq(std::move(body))});

    IRProgram prog;
    prog.iters = std::move(iters_);
    prog.entry = "main";
    for (const ColumnDecl& d : param_decls_) {
      prog.entry_params.push_back(coarse({d.kind, d.scale}));
    }

    std::vector<IRDiag> diags = typecheck_ir(prog);
    if (!diags.empty()) {
      std::string msg = "lowering produced an ill-typed program:";
      for (const IRDiag& d : diags) msg += "\n  " + d.to_string();
      throw LoweringError(msg);
    }
    return LoweredPlan{std::move(prog), std::move(schema),
                       std::move(param_idents_), std::move(param_decls_)};
  }

 private:
  // -- layout plumbing --

  const LayoutTypePtr* type_at(const Path& p) const {
    auto it = typed_.by_path.find(path_to_string(p));
    return it == typed_.by_path.end() ? nullptr : &it->second;
  }

  static Path child_path(const Path& p, int i) {
    Path out = p;
    out.push_back(i);
    return out;
  }

  static std::string iter_name(const Path& p) {
    std::string n = "rd";
    for (int i : p) n += "_" + std::to_string(i);
    return n;
  }

  // Total footprint of a node instance starting at `start`: a constant when
  // the type pins it, otherwise headers plus the length header's value.
  IRExprPtr total_size_expr(const LayoutTypePtr& t, const IRExprPtr& start) {
    if (std::optional<int64_t> c = const_total_size(t)) return ir_int(*c);
    int cw = count_header_width(t);
    int lw = len_header_width(t);
    if (lw == 0) {
      throw LoweringError("variable-sized node has no length header");
    }
    return iadd(toint_at(iadd(start, cw), lw), cw + lw);
  }

  // Decodes one scalar at `pos` per its layout type.
  IRExprPtr decode_scalar(const LayoutTypePtr& t, const IRExprPtr& pos) {
    switch (t->kind) {
      case LayoutKind::kInt:
        return toint_at(pos, t->width);
      case LayoutKind::kDate:
        return ir_op(IROp::kToDate, {toint_at(pos, t->width)});
      case LayoutKind::kFixed:
        return ir_op(IROp::kToFixed,
                     {toint_at(pos, t->width), ir_int(t->scale)});
      case LayoutKind::kBool:
        return ir_op(IROp::kToBool, {ir_slice(pos, ir_int(1))});
      case LayoutKind::kString: {
        int lw = len_header_width(t);
        IRExprPtr len = lw ? toint_at(pos, lw) : ir_int(t->values.lo);
        return ir_op(IROp::kLoadBytes, {iadd(pos, lw), std::move(len)});
      }
      default:
        throw LoweringError(std::string("cannot decode ") +
                            layout_kind_name(t->kind) + " as a scalar");
    }
  }

  // -- iterator calling convention --

  struct BinderCtx {
    std::string scope;
    Schema schema;    // left-side columns, unqualified
    std::string var;  // tuple parameter carrying the current row
  };

  std::vector<std::string> iter_params(const std::vector<BinderCtx>& binders) {
    std::vector<std::string> ps = {"start"};
    for (const std::string& pv : param_vars_) ps.push_back(pv);
    for (const BinderCtx& b : binders) ps.push_back(b.var);
    return ps;
  }

  std::vector<IRExprPtr> call_args(IRExprPtr start,
                                   const std::vector<BinderCtx>& binders) {
    std::vector<IRExprPtr> args = {std::move(start)};
    for (const std::string& pv : param_vars_) args.push_back(ir_var(pv));
    for (const BinderCtx& b : binders) args.push_back(ir_var(b.var));
    return args;
  }

  Env base_env(const std::vector<BinderCtx>& binders) {
    Env env;
    for (size_t i = 0; i < param_idents_.size(); ++i) {
      env[param_idents_[i]] = ir_var(param_vars_[i]);
    }
    for (const BinderCtx& b : binders) {
      for (size_t j = 0; j < b.schema.size(); ++j) {
        env[Ident(b.scope, b.schema[j].base)] =
            ir_index(ir_var(b.var), static_cast<int>(j));
      }
    }
    return env;
  }

  static Env row_env(Env base, const Schema& cols, const std::string& rowvar) {
    for (size_t j = 0; j < cols.size(); ++j) {
      base[cols[j]] = ir_index(ir_var(rowvar), static_cast<int>(j));
    }
    return base;
  }

  // init `child` with `args` and pull it to exhaustion; `per_row` supplies
  // the statements run once per yielded row (the argument is the row
  // variable).
  void drain(Emit& em, std::vector<IRStmtPtr>& out, const std::string& child,
             std::vector<IRExprPtr> args,
             const std::function<std::vector<IRStmtPtr>(const std::string&)>&
                 per_row) {
    std::string r = em.fresh_var("r");
    std::string more = em.fresh_var("more");
    out.push_back(ir_init(child, std::move(args)));
    out.push_back(ir_assign(more, ir_bool(true)));
    std::vector<IRStmtPtr> rows = per_row(r);
    out.push_back(
        ir_loop(ir_var(more),
                ir_seq({ir_next(r, child),
                        ir_if(ir_done(child), ir_assign(more, ir_bool(false)),
                              ir_seq(std::move(rows)))})));
  }

  // -- scalar expression compilation --
  //
  // `hint` types null literals: bare null carries no kind of its own, so the
  // surrounding context (the other comparison operand, the opposite branch
  // of a conditional, the key column being probed) supplies one.

  IRExprPtr cexpr(const ExprPtr& e, const Env& env, const KindEnv& kenv,
                  const ColInfo* hint) {
    switch (e->kind) {
      case EK::kConst: {
        const Value& v = e->value;
        switch (v.kind()) {
          case ValueKind::kNull:
            return null_const(hint ? coarse(*hint) : IRType::integer());
          case ValueKind::kInt:
            return ir_int(v.as_int());
          case ValueKind::kBool:
            return ir_bool(v.as_bool());
          default:
            return ir_const(VmVal::of(v), coarse({v.kind(), 0}));
        }
      }
      case EK::kName: {
        auto it = env.find(e->name);
        if (it == env.end()) {
          throw LoweringError("name " + e->name.to_string() +
                              " is not available to the generated reader");
        }
        return it->second;
      }
      case EK::kBinop: {
        ColInfo ha, hb;
        const ColInfo* pa = nullptr;
        const ColInfo* pb = nullptr;
        if (is_null_lit(e->a)) ha = kinds_.info(e->b, kenv), pa = &ha;
        if (is_null_lit(e->b)) hb = kinds_.info(e->a, kenv), pb = &hb;
        return op2(binop_ir(e->op), cexpr(e->a, env, kenv, pa),
                   cexpr(e->b, env, kenv, pb));
      }
      case EK::kNot: {
        ColInfo hb{ValueKind::kBool, 0};
        return ir_op(IROp::kNot, {cexpr(e->a, env, kenv, &hb)});
      }
      case EK::kIf: {
        ColInfo hc{ValueKind::kBool, 0}, ht, he;
        const ColInfo* pt = nullptr;
        const ColInfo* pe = nullptr;
        if (is_null_lit(e->b)) ht = kinds_.info(e->c, kenv), pt = &ht;
        if (is_null_lit(e->c)) he = kinds_.info(e->b, kenv), pe = &he;
        return ir_op(IROp::kCond,
                     {cexpr(e->a, env, kenv, &hc), cexpr(e->b, env, kenv, pt),
                      cexpr(e->c, env, kenv, pe)});
      }
      case EK::kExists:
      case EK::kFirst:
        throw LoweringError(
            "exists/first subqueries cannot run against serialized data");
      default:
        throw LoweringError(
            "aggregates are only lowered inside a select output list");
    }
  }

  // -- parameter manifest --
  //
  // Parameters are collected in preorder; a parameter's kind is pinned the
  // first time it appears in a position that implies one (an index lookup
  // column, or a comparison/arithmetic partner with a known kind) and
  // defaults to int.

  size_t param_slot(const Ident& id) {
    for (size_t i = 0; i < param_idents_.size(); ++i) {
      if (param_idents_[i] == id) return i;
    }
    param_idents_.push_back(id);
    param_vars_.push_back(id.base);
    param_decls_.push_back(ColumnDecl{id.base, ValueKind::kInt, 0});
    param_fixed_.push_back(false);
    return param_idents_.size() - 1;
  }

  void pin_param(const Ident& id, const ColInfo& c) {
    size_t i = param_slot(id);
    if (param_fixed_[i]) return;
    param_decls_[i].kind = c.kind;
    param_decls_[i].scale = c.scale;
    param_fixed_[i] = true;
  }

  void maybe_pin(const ExprPtr& cand, const ExprPtr& other,
                 const KindEnv& env) {
    if (cand->kind != EK::kName || !cand->name.is_param()) return;
    param_slot(cand->name);
    if (is_null_lit(other)) return;
    if (other->kind == EK::kName && other->name.is_param() &&
        env.find(other->name) == env.end()) {
      return;  // two bare parameters pin nothing
    }
    pin_param(cand->name, kinds_.info(other, env));
  }

  void scan_expr(const ExprPtr& e, const KindEnv& env, const ColInfo* expected) {
    switch (e->kind) {
      case EK::kConst:
        return;
      case EK::kName:
        if (e->name.is_param()) {
          param_slot(e->name);
          if (expected) pin_param(e->name, *expected);
        }
        return;
      case EK::kBinop:
        maybe_pin(e->a, e->b, env);
        maybe_pin(e->b, e->a, env);
        scan_expr(e->a, env, nullptr);
        scan_expr(e->b, env, nullptr);
        return;
      case EK::kNot:
        scan_expr(e->a, env, nullptr);
        return;
      case EK::kIf:
        scan_expr(e->a, env, nullptr);
        scan_expr(e->b, env, nullptr);
        scan_expr(e->c, env, nullptr);
        return;
      case EK::kExists:
      case EK::kFirst:
        // Off the layout spine: no type lookups apply inside.
        scan_query(e->query, Path{-1}, env);
        return;
      case EK::kCount:
        return;
      case EK::kSum:
      case EK::kMin:
      case EK::kMax:
      case EK::kAvg:
        scan_expr(e->a, env, nullptr);
        return;
    }
  }

  void scan_query(const QueryPtr& q, const Path& path, const KindEnv& env) {
    switch (q->kind) {
      case QK::kRelation:
      case QK::kAEmpty:
        return;
      case QK::kDedup:
        scan_query(q->children[0], child_path(path, 0), env);
        return;
      case QK::kSelect:
      case QK::kGroupBy: {
        KindEnv renv = kinds_.extend_rows(env, q->children[0]);
        for (const NamedExpr& it : q->items) scan_expr(it.expr, renv, nullptr);
        scan_query(q->children[0], child_path(path, 0), env);
        return;
      }
      case QK::kFilter: {
        scan_expr(q->pred, kinds_.extend_rows(env, q->children[0]), nullptr);
        scan_query(q->children[0], child_path(path, 0), env);
        return;
      }
      case QK::kJoin: {
        KindEnv renv = kinds_.extend_rows(
            kinds_.extend_rows(env, q->children[0]), q->children[1]);
        scan_expr(q->pred, renv, nullptr);
        scan_query(q->children[0], child_path(path, 0), env);
        scan_query(q->children[1], child_path(path, 1), env);
        return;
      }
      case QK::kOrderBy: {
        KindEnv renv = kinds_.extend_rows(env, q->children[0]);
        for (const SortKey& k : q->sort_keys) scan_expr(k.expr, renv, nullptr);
        scan_query(q->children[0], child_path(path, 0), env);
        return;
      }
      case QK::kDepJoin:
      case QK::kAList:
        scan_query(q->children[0], child_path(path, 0), env);
        scan_query(q->children[1], child_path(path, 1),
                   kinds_.extend_scoped(env, q->children[0], q->scope));
        return;
      case QK::kAScalar:
        scan_expr(q->scalar.expr, env, nullptr);
        return;
      case QK::kATuple:
        for (size_t i = 0; i < q->children.size(); ++i) {
          scan_query(q->children[i], child_path(path, static_cast<int>(i)),
                     env);
        }
        return;
      case QK::kAHashIdx:
      case QK::kAOrderedIdx: {
        const LayoutTypePtr* t = type_at(path);
        auto scan_bound = [&](const ExprPtr& e, size_t i) {
          ColInfo hint;
          const ColInfo* ph = nullptr;
          if (t && (*t)->key && i < (*t)->key->children.size() &&
              (*t)->key->children[i]->kind != LayoutKind::kEmpty) {
            hint = layout_col_info((*t)->key->children[i]);
            ph = &hint;
          }
          scan_expr(e, env, ph);
        };
        for (size_t i = 0; i < q->key_exprs.size(); ++i) {
          scan_bound(q->key_exprs[i], i);
        }
        for (size_t i = 0; i < q->lo_exprs.size(); ++i) {
          scan_bound(q->lo_exprs[i], i);
        }
        for (size_t i = 0; i < q->hi_exprs.size(); ++i) {
          scan_bound(q->hi_exprs[i], i);
        }
        scan_query(q->children[0], child_path(path, 0), env);
        scan_query(q->children[1], child_path(path, 1),
                   kinds_.extend_scoped(env, q->children[0], q->scope));
        return;
      }
    }
  }

  // -- node readers --

  // A node that is never instantiated (the value of an index that held no
  // keys, or anything beneath one) still needs an iterator so the program
  // stays closed; it yields under a false guard, with null constants typed
  // by the node's columns so inference sees a concrete row type.
  void dead_body(const QueryPtr& q, const KindEnv& kenv,
                 std::vector<IRStmtPtr>& body) {
    std::vector<IRExprPtr> nulls;
    for (const ColInfo& c : kinds_.cols_of(q, kenv)) {
      nulls.push_back(null_const(coarse(c)));
    }
    body.push_back(ir_if(ir_bool(false),
                         ir_yield(ir_op(IROp::kMakeTuple, std::move(nulls))),
                         ir_skip()));
  }

  std::string gen(const QueryPtr& q, const Path& path,
                  const std::vector<BinderCtx>& binders, const KindEnv& kenv) {
    Emit em;
    em.params = iter_params(binders);
    std::vector<IRStmtPtr> body;

    switch (q->kind) {
      case QK::kSelect:
        gen_select(*q, path, binders, kenv, em, body);
        break;
      case QK::kFilter:
        gen_filter(*q, path, binders, kenv, em, body);
        break;
      case QK::kDepJoin:
        gen_depjoin(*q, path, binders, kenv, em, body);
        break;
      case QK::kAScalar: {
        const LayoutTypePtr* t = type_at(path);
        if (!t) {
          dead_body(q, kenv, body);
          break;
        }
        body.push_back(ir_yield(
            ir_op(IROp::kMakeTuple, {decode_scalar(*t, ir_var("start"))})));
        break;
      }
      case QK::kATuple:
        gen_tuple(*q, path, binders, kenv, em, body);
        break;
      case QK::kAList:
        gen_list(*q, path, binders, kenv, em, body);
        break;
      case QK::kAHashIdx:
        gen_hash(*q, path, binders, kenv, em, body);
        break;
      case QK::kAOrderedIdx:
        gen_ordered(*q, path, binders, kenv, em, body);
        break;
      case QK::kAEmpty:
        dead_body(q, kenv, body);
        break;
      default:
        throw LoweringError(std::string(query_kind_name(q->kind)) +
                            " survives to run time; rewrite it into layout "
                            "operators first");
    }

    std::string name = iter_name(path);
    iters_.push_back(IRIterator{name, em.params, ir_seq(std::move(body))});
    return name;
  }

  void gen_select(const QueryExpr& q, const Path& path,
                  const std::vector<BinderCtx>& binders, const KindEnv& kenv,
                  Emit& em, std::vector<IRStmtPtr>& body) {
    const QueryPtr& ch = q.children[0];
    std::string child = gen(ch, child_path(path, 0), binders, kenv);
    if (has_aggregates(q.items)) {
      gen_agg_select(q, child, binders, kenv, em, body);
      return;
    }
    Env base = base_env(binders);
    Schema cs = schema_of(ch, cat_);
    KindEnv rk = kinds_.extend_rows(kenv, ch);
    drain(em, body, child, call_args(ir_var("start"), binders),
          [&](const std::string& r) {
            Env renv = row_env(base, cs, r);
            std::vector<IRExprPtr> items;
            for (const NamedExpr& it : q.items) {
              items.push_back(cexpr(it.expr, renv, rk, nullptr));
            }
            return std::vector<IRStmtPtr>{
                ir_yield(ir_op(IROp::kMakeTuple, std::move(items)))};
          });
  }

  // An aggregate select always yields exactly one row.  Accumulators follow
  // the reference folds; holder variables carry the last row's columns for
  // the non-aggregate parts, starting from the enclosing bindings (or null)
  // so an empty child reproduces the fallback behavior.
  void gen_agg_select(const QueryExpr& q, const std::string& child,
                      const std::vector<BinderCtx>& binders,
                      const KindEnv& kenv, Emit& em,
                      std::vector<IRStmtPtr>& body) {
    const QueryPtr& ch = q.children[0];
    Env base = base_env(binders);
    Schema cs = schema_of(ch, cat_);
    std::vector<ColInfo> ccols = kinds_.cols_of(ch, kenv);
    KindEnv rk = kinds_.extend_rows(kenv, ch);

    std::vector<ExprPtr> aggs;
    std::vector<ExprPtr> residual;
    for (const NamedExpr& it : q.items) {
      residual.push_back(extract_aggs(it.expr, &aggs));
    }

    std::vector<Ident> used;
    for (const ExprPtr& r : residual) collect_expr_idents(r, &used);
    std::map<Ident, std::pair<std::string, int>> holders;  // ident -> (var, col)
    for (const Ident& id : used) {
      if (is_marker(id) || holders.count(id)) continue;
      for (size_t j = 0; j < cs.size(); ++j) {
        if (cs[j] == id) {
          holders.emplace(id, std::make_pair(em.fresh_var("h"),
                                             static_cast<int>(j)));
          break;
        }
      }
    }

    std::string cnt = em.fresh_var("cnt");
    body.push_back(ir_assign(cnt, ir_int(0)));
    struct Acc {
      std::string s, n, m;
    };
    std::vector<Acc> acc(aggs.size());
    for (size_t k = 0; k < aggs.size(); ++k) {
      switch (aggs[k]->kind) {
        case EK::kCount:
          break;
        case EK::kSum:
          acc[k].s = em.fresh_var("sum");
          body.push_back(ir_assign(acc[k].s, ir_int(0)));
          break;
        case EK::kAvg:
          acc[k].s = em.fresh_var("sum");
          acc[k].n = em.fresh_var("nn");
          body.push_back(ir_assign(acc[k].s, ir_int(0)));
          body.push_back(ir_assign(acc[k].n, ir_int(0)));
          break;
        default:
          acc[k].m = em.fresh_var("m");
          body.push_back(ir_assign(
              acc[k].m, null_const(coarse(kinds_.info(aggs[k]->a, rk)))));
          break;
      }
    }
    for (const auto& [id, hv] : holders) {
      auto it = base.find(id);
      IRExprPtr init =
          it != base.end()
              ? it->second
              : null_const(coarse(static_cast<size_t>(hv.second) < ccols.size()
                                      ? ccols[hv.second]
                                      : ColInfo{}));
      body.push_back(ir_assign(hv.first, std::move(init)));
    }

    drain(em, body, child, call_args(ir_var("start"), binders),
          [&](const std::string& r) {
            std::vector<IRStmtPtr> out;
            Env renv = row_env(base, cs, r);
            out.push_back(ir_assign(cnt, iadd(ir_var(cnt), 1)));
            for (size_t k = 0; k < aggs.size(); ++k) {
              const ExprPtr& a = aggs[k];
              if (a->kind == EK::kCount) continue;
              std::string v = em.fresh_var("v");
              out.push_back(ir_assign(v, cexpr(a->a, renv, rk, nullptr)));
              IRExprPtr vnull = ir_op(IROp::kIsNull, {ir_var(v)});
              switch (a->kind) {
                case EK::kSum:
                case EK::kAvg:
                  out.push_back(ir_assign(
                      acc[k].s,
                      ir_op(IROp::kCond,
                            {vnull, ir_var(acc[k].s),
                             iadd(ir_var(acc[k].s), ir_var(v))})));
                  if (a->kind == EK::kAvg) {
                    out.push_back(ir_assign(
                        acc[k].n,
                        iadd(ir_var(acc[k].n),
                             ir_op(IROp::kCond,
                                   {ir_op(IROp::kIsNull, {ir_var(v)}),
                                    ir_int(0), ir_int(1)}))));
                  }
                  break;
                case EK::kMin:
                case EK::kMax: {
                  IROp cmp = a->kind == EK::kMin ? IROp::kLt : IROp::kGt;
                  IRExprPtr better = ir_op(
                      IROp::kCond,
                      {ir_op(IROp::kIsNull, {ir_var(acc[k].m)}), ir_var(v),
                       ir_op(IROp::kCond,
                             {op2(cmp, ir_var(v), ir_var(acc[k].m)), ir_var(v),
                              ir_var(acc[k].m)})});
                  out.push_back(ir_assign(
                      acc[k].m, ir_op(IROp::kCond, {vnull, ir_var(acc[k].m),
                                                    std::move(better)})));
                  break;
                }
                default:
                  break;
              }
            }
            for (const auto& [id, hv] : holders) {
              out.push_back(ir_assign(hv.first, ir_index(ir_var(r), hv.second)));
            }
            return out;
          });

    Env fenv = base;
    for (const auto& [id, hv] : holders) fenv[id] = ir_var(hv.first);
    for (size_t k = 0; k < aggs.size(); ++k) {
      IRExprPtr fin;
      switch (aggs[k]->kind) {
        case EK::kCount:
          fin = ir_var(cnt);
          break;
        case EK::kSum:
          fin = ir_var(acc[k].s);
          break;
        case EK::kAvg:
          fin = ir_op(IROp::kCond,
                      {op2(IROp::kEq, ir_var(acc[k].n), ir_int(0)),
                       null_const(IRType::integer()),
                       op2(IROp::kDiv, ir_var(acc[k].s), ir_var(acc[k].n))});
          break;
        default:
          fin = ir_var(acc[k].m);
          break;
      }
      fenv[marker_ident(k)] = std::move(fin);
    }
    std::vector<IRExprPtr> items;
    for (const ExprPtr& r : residual) {
      items.push_back(cexpr(r, fenv, rk, nullptr));
    }
    body.push_back(ir_yield(ir_op(IROp::kMakeTuple, std::move(items))));
  }

  void gen_filter(const QueryExpr& q, const Path& path,
                  const std::vector<BinderCtx>& binders, const KindEnv& kenv,
                  Emit& em, std::vector<IRStmtPtr>& body) {
    const QueryPtr& ch = q.children[0];
    std::string child = gen(ch, child_path(path, 0), binders, kenv);
    Env base = base_env(binders);
    Schema cs = schema_of(ch, cat_);
    KindEnv rk = kinds_.extend_rows(kenv, ch);
    ColInfo hb{ValueKind::kBool, 0};
    drain(em, body, child, call_args(ir_var("start"), binders),
          [&](const std::string& r) {
            Env renv = row_env(base, cs, r);
            return std::vector<IRStmtPtr>{
                ir_if(cexpr(q.pred, renv, rk, &hb), ir_yield(ir_var(r)),
                      ir_skip())};
          });
  }

  void gen_depjoin(const QueryExpr& q, const Path& path,
                   const std::vector<BinderCtx>& binders, const KindEnv& kenv,
                   Emit& em, std::vector<IRStmtPtr>& body) {
    const LayoutTypePtr* t = type_at(path);
    if (!t) {
      dead_body(q.children[1], kenv, body);  // schema matches the right side
      return;
    }
    int lw = len_header_width(*t);
    const LayoutTypePtr& lt = (*t)->children[0];

    std::string L = gen(q.children[0], child_path(path, 0), binders, kenv);
    Schema ls = schema_of(q.children[0], cat_);
    std::vector<BinderCtx> rb = binders;
    rb.push_back(BinderCtx{q.scope, ls, "env_" + q.scope});
    KindEnv rkenv = kinds_.extend_scoped(kenv, q.children[0], q.scope);
    std::string R = gen(q.children[1], child_path(path, 1), rb, rkenv);

    std::string sl = em.fresh_var("s");
    std::string sr = em.fresh_var("s");
    body.push_back(ir_assign(sl, iadd(ir_var("start"), lw)));
    body.push_back(
        ir_assign(sr, iadd(ir_var(sl), total_size_expr(lt, ir_var(sl)))));
    drain(em, body, L, call_args(ir_var(sl), binders),
          [&](const std::string& rl) {
            std::vector<IRStmtPtr> out;
            std::vector<IRExprPtr> rargs = call_args(ir_var(sr), binders);
            rargs.push_back(ir_var(rl));
            drain(em, out, R, std::move(rargs), [&](const std::string& rr) {
              return std::vector<IRStmtPtr>{ir_yield(ir_var(rr))};
            });
            return out;
          });
  }

  void gen_tuple(const QueryExpr& q, const Path& path,
                 const std::vector<BinderCtx>& binders, const KindEnv& kenv,
                 Emit& em, std::vector<IRStmtPtr>& body) {
    const LayoutTypePtr* pt = type_at(path);
    if (!pt) {
      dead_body(std::make_shared<const QueryExpr>(q), kenv, body);
      return;
    }
    const LayoutTypePtr& t = *pt;
    size_t k = q.children.size();
    int lw = len_header_width(t);

    std::vector<std::string> starts(k);
    IRExprPtr cur = iadd(ir_var("start"), lw);
    for (size_t i = 0; i < k; ++i) {
      starts[i] = em.fresh_var("s");
      body.push_back(ir_assign(starts[i], std::move(cur)));
      if (i + 1 < k) {
        cur = iadd(ir_var(starts[i]),
                   total_size_expr(t->children[i], ir_var(starts[i])));
      }
    }
    std::vector<std::string> its(k);
    std::vector<int> arity(k);
    for (size_t i = 0; i < k; ++i) {
      its[i] = gen(q.children[i], child_path(path, static_cast<int>(i)),
                   binders, kenv);
      arity[i] =
          static_cast<int>(schema_of(q.children[i], cat_).size());
    }

    if (q.tuple_kind == TupleKind::kConcat) {
      for (size_t i = 0; i < k; ++i) {
        drain(em, body, its[i], call_args(ir_var(starts[i]), binders),
              [&](const std::string& r) {
                return std::vector<IRStmtPtr>{ir_yield(ir_var(r))};
              });
      }
      return;
    }

    // Cross: nested loops, last child innermost, so the merge order matches
    // the sequence semantics.  Zero children cross to the single empty row.
    std::vector<std::string> rowvars(k);
    std::function<std::vector<IRStmtPtr>(size_t)> nest =
        [&](size_t i) -> std::vector<IRStmtPtr> {
      if (i == k) {
        std::vector<IRExprPtr> fields;
        for (size_t c = 0; c < k; ++c) {
          for (int j = 0; j < arity[c]; ++j) {
            fields.push_back(ir_index(ir_var(rowvars[c]), j));
          }
        }
        return {ir_yield(ir_op(IROp::kMakeTuple, std::move(fields)))};
      }
      std::vector<IRStmtPtr> out;
      drain(em, out, its[i], call_args(ir_var(starts[i]), binders),
            [&](const std::string& r) {
              rowvars[i] = r;
              return nest(i + 1);
            });
      return out;
    };
    std::vector<IRStmtPtr> stmts = nest(0);
    body.insert(body.end(), stmts.begin(), stmts.end());
  }

  void gen_list(const QueryExpr& q, const Path& path,
                const std::vector<BinderCtx>& binders, const KindEnv& kenv,
                Emit& em, std::vector<IRStmtPtr>& body) {
    const LayoutTypePtr* pt = type_at(path);
    if (!pt || (*pt)->count.hi == 0) {
      dead_body(std::make_shared<const QueryExpr>(q), kenv, body);
      return;
    }
    const LayoutTypePtr& t = *pt;
    int cw = count_header_width(t);
    int lw = len_header_width(t);
    std::string E =
        gen(q.children[1], child_path(path, 1), binders,
            kinds_.extend_scoped(kenv, q.children[0], q.scope));

    std::string n = em.fresh_var("n");
    std::string pos = em.fresh_var("pos");
    std::string i = em.fresh_var("i");
    body.push_back(ir_assign(
        n, cw ? toint_at(ir_var("start"), cw) : ir_int(t->count.lo)));
    body.push_back(ir_assign(pos, iadd(ir_var("start"), cw + lw)));
    body.push_back(ir_assign(i, ir_int(0)));

    std::vector<IRStmtPtr> lb;
    IRExprPtr adv;
    if (std::optional<int64_t> c = const_total_size(t->elem)) {
      adv = iadd(ir_var(pos), *c);
    } else {
      std::string sz = em.fresh_var("sz");
      lb.push_back(ir_assign(sz, total_size_expr(t->elem, ir_var(pos))));
      adv = iadd(ir_var(pos), ir_var(sz));
    }
    drain(em, lb, E, call_args(ir_var(pos), binders),
          [&](const std::string& r) {
            return std::vector<IRStmtPtr>{ir_yield(ir_var(r))};
          });
    lb.push_back(ir_assign(pos, std::move(adv)));
    lb.push_back(ir_assign(i, iadd(ir_var(i), 1)));
    body.push_back(
        ir_loop(op2(IROp::kLt, ir_var(i), ir_var(n)), ir_seq(std::move(lb))));
  }

  // Decoded key columns of an index slot beginning at `at`; `cols[j]` lands
  // at the cumulative slot offset of column j.
  std::vector<IRExprPtr> decode_key_cols(const LayoutTypePtr& key,
                                         const IRExprPtr& at) {
    std::vector<IRExprPtr> out;
    int64_t off = 0;
    for (const LayoutTypePtr& col : key->children) {
      out.push_back(decode_scalar(col, iadd(at, off)));
      off += key_column_slot_width(col);
    }
    return out;
  }

  void gen_hash(const QueryExpr& q, const Path& path,
                const std::vector<BinderCtx>& binders, const KindEnv& kenv,
                Emit& em, std::vector<IRStmtPtr>& body) {
    const LayoutTypePtr* pt = type_at(path);
    if (!pt || (*pt)->count.hi == 0) {
      dead_body(std::make_shared<const QueryExpr>(q), kenv, body);
      return;
    }
    const LayoutTypePtr& t = *pt;
    int cw = count_header_width(t);
    int lw = len_header_width(t);
    int hdr = cw + lw;
    int64_t ksw = key_slot_width(t->key);
    int ow = t->off_width;
    int64_t slot_w = ksw + ow;
    size_t m = t->key->children.size();
    if (q.key_exprs.size() != m) {
      throw LoweringError("hash index lookup arity mismatch");
    }

    std::string V =
        gen(q.children[1], child_path(path, 1), binders,
            kinds_.extend_scoped(kenv, q.children[0], q.scope));
    Env base = base_env(binders);

    std::string n = em.fresh_var("n");
    std::string nb = em.fresh_var("nb");
    body.push_back(ir_assign(
        n, cw ? toint_at(ir_var("start"), cw) : ir_int(t->count.lo)));
    body.push_back(ir_assign(
        nb, cw ? op2(IROp::kDiv, iadd(ir_var(n), 3), ir_int(4))
               : ir_int(hash_bucket_count(t->count.lo))));

    // Lookup key values (hinted by the stored column kinds, for nulls).
    std::vector<std::string> kv(m);
    std::vector<IRExprPtr> kvars;
    for (size_t i = 0; i < m; ++i) {
      ColInfo hint = layout_col_info(t->key->children[i]);
      kv[i] = em.fresh_var("k");
      body.push_back(
          ir_assign(kv[i], cexpr(q.key_exprs[i], base, kenv, &hint)));
      kvars.push_back(ir_var(kv[i]));
    }

    // bucket -> seed -> slot -> compare stored key -> value blob.
    std::vector<IRExprPtr> h0 = {ir_int(0)};
    h0.insert(h0.end(), kvars.begin(), kvars.end());
    std::string bk = em.fresh_var("b");
    std::string sd = em.fresh_var("sd");
    std::string slot = em.fresh_var("slot");
    std::string sp = em.fresh_var("sp");
    IRExprPtr seeds_at = iadd(ir_var("start"), hdr);
    IRExprPtr slots_at = iadd(iadd(ir_var("start"), hdr),
                              imul(ir_var(nb), kHashSeedWidth));

    std::vector<IRStmtPtr> hit;
    IRExprPtr vpos;
    if (ow > 0) {
      vpos = iadd(ir_var("start"),
                  toint_at(iadd(ir_var(sp), ksw), ow));
    } else {
      std::optional<int64_t> vc = const_total_size(t->value);
      if (!vc) {
        throw LoweringError(
            "hash index elided value offsets without a constant value size");
      }
      vpos = iadd(iadd(slots_at, imul(ir_var(n), slot_w)),
                  imul(ir_var(slot), *vc));
    }
    std::string vp = em.fresh_var("vp");
    hit.push_back(ir_assign(vp, std::move(vpos)));
    drain(em, hit, V, call_args(ir_var(vp), binders),
          [&](const std::string& r) {
            return std::vector<IRStmtPtr>{ir_yield(ir_var(r))};
          });

    std::vector<IRExprPtr> stored = decode_key_cols(t->key, ir_var(sp));
    std::vector<IRExprPtr> eqs;
    for (size_t i = 0; i < m; ++i) {
      eqs.push_back(op2(IROp::kEq, stored[i], kvars[i]));
    }

    std::vector<IRStmtPtr> probe;
    std::vector<IRExprPtr> hs = {ir_var(sd)};
    hs.insert(hs.end(), kvars.begin(), kvars.end());
    probe.push_back(ir_assign(
        slot, op2(IROp::kMod, ir_op(IROp::kHash, std::move(hs)), ir_var(n))));
    probe.push_back(
        ir_assign(sp, iadd(slots_at, imul(ir_var(slot), slot_w))));
    probe.push_back(
        ir_if(and_chain(std::move(eqs)), ir_seq(std::move(hit)), ir_skip()));

    std::vector<IRStmtPtr> inner;
    inner.push_back(ir_assign(
        bk, op2(IROp::kMod, ir_op(IROp::kHash, std::move(h0)), ir_var(nb))));
    inner.push_back(ir_assign(
        sd, toint_at(iadd(seeds_at, imul(ir_var(bk), kHashSeedWidth)),
                     kHashSeedWidth)));
    inner.push_back(ir_if(op2(IROp::kGt, ir_var(sd), ir_int(0)),
                          ir_seq(std::move(probe)), ir_skip()));

    body.push_back(ir_if(op2(IROp::kGt, ir_var(n), ir_int(0)),
                         ir_seq(std::move(inner)), ir_skip()));
  }

  void gen_ordered(const QueryExpr& q, const Path& path,
                   const std::vector<BinderCtx>& binders, const KindEnv& kenv,
                   Emit& em, std::vector<IRStmtPtr>& body) {
    const LayoutTypePtr* pt = type_at(path);
    if (!pt || (*pt)->count.hi == 0) {
      dead_body(std::make_shared<const QueryExpr>(q), kenv, body);
      return;
    }
    const LayoutTypePtr& t = *pt;
    int cw = count_header_width(t);
    int lw = len_header_width(t);
    int64_t ksw = key_slot_width(t->key);
    int ow = t->off_width;
    size_t m = t->key->children.size();
    if (q.lo_exprs.size() != m || q.hi_exprs.size() != m) {
      throw LoweringError("ordered index bound arity mismatch");
    }

    std::string V =
        gen(q.children[1], child_path(path, 1), binders,
            kinds_.extend_scoped(kenv, q.children[0], q.scope));
    Env base = base_env(binders);

    std::string n = em.fresh_var("n");
    body.push_back(ir_assign(
        n, cw ? toint_at(ir_var("start"), cw) : ir_int(t->count.lo)));
    IRExprPtr keys_at = iadd(ir_var("start"), cw + lw);

    std::vector<std::string> lov(m), hiv(m);
    for (size_t i = 0; i < m; ++i) {
      ColInfo hint = layout_col_info(t->key->children[i]);
      lov[i] = em.fresh_var("lo");
      hiv[i] = em.fresh_var("hi");
      body.push_back(ir_assign(lov[i], cexpr(q.lo_exprs[i], base, kenv, &hint)));
      body.push_back(ir_assign(hiv[i], cexpr(q.hi_exprs[i], base, kenv, &hint)));
    }

    // Keys are stored in strictly increasing order, so the entries whose
    // first column falls in [lo0, hi0] form one contiguous run: binary-search
    // its start, scan until the first column passes hi0, and re-check the
    // whole per-column box on each candidate (the later columns need not be
    // contiguous).
    const LayoutTypePtr& c0 = t->key->children[0];
    std::string blo = em.fresh_var("blo");
    std::string bhi = em.fresh_var("bhi");
    std::string mid = em.fresh_var("mid");
    body.push_back(ir_assign(blo, ir_int(0)));
    body.push_back(ir_assign(bhi, ir_var(n)));
    {
      std::vector<IRStmtPtr> sb;
      sb.push_back(ir_assign(
          mid, op2(IROp::kDiv, iadd(ir_var(blo), ir_var(bhi)), ir_int(2))));
      IRExprPtr c = decode_scalar(c0, iadd(keys_at, imul(ir_var(mid), ksw)));
      sb.push_back(ir_if(op2(IROp::kLt, std::move(c), ir_var(lov[0])),
                         ir_assign(blo, iadd(ir_var(mid), 1)),
                         ir_assign(bhi, ir_var(mid))));
      body.push_back(ir_loop(op2(IROp::kLt, ir_var(blo), ir_var(bhi)),
                             ir_seq(std::move(sb))));
    }

    std::string p = em.fresh_var("p");
    std::string go = em.fresh_var("go");
    body.push_back(ir_assign(p, ir_var(blo)));
    body.push_back(ir_assign(go, ir_bool(true)));

    IRExprPtr row_at = iadd(keys_at, imul(ir_var(p), ksw));
    std::vector<IRExprPtr> cols = decode_key_cols(t->key, row_at);
    std::vector<std::string> cv(m);
    std::vector<IRStmtPtr> in_run;
    // c0 is bound before the hi0 test; the rest only for the box check.
    std::vector<IRExprPtr> box;
    for (size_t i = 0; i < m; ++i) {
      cv[i] = em.fresh_var("c");
      box.push_back(op2(IROp::kLe, ir_var(lov[i]), ir_var(cv[i])));
      box.push_back(op2(IROp::kLe, ir_var(cv[i]), ir_var(hiv[i])));
    }

    IRExprPtr vpos;
    if (ow > 0) {
      vpos = iadd(ir_var("start"),
                  toint_at(iadd(iadd(keys_at, imul(ir_var(n), ksw)),
                                imul(ir_var(p), ow)),
                           ow));
    } else {
      std::optional<int64_t> vc = const_total_size(t->value);
      if (!vc) {
        throw LoweringError(
            "ordered index elided value offsets without a constant value size");
      }
      vpos = iadd(iadd(keys_at, imul(ir_var(n), ksw)), imul(ir_var(p), *vc));
    }
    std::string vp = em.fresh_var("vp");
    std::vector<IRStmtPtr> hit;
    hit.push_back(ir_assign(vp, std::move(vpos)));
    drain(em, hit, V, call_args(ir_var(vp), binders),
          [&](const std::string& r) {
            return std::vector<IRStmtPtr>{ir_yield(ir_var(r))};
          });

    for (size_t i = 1; i < m; ++i) {
      in_run.push_back(ir_assign(cv[i], cols[i]));
    }
    in_run.push_back(
        ir_if(and_chain(std::move(box)), ir_seq(std::move(hit)), ir_skip()));
    in_run.push_back(ir_assign(p, iadd(ir_var(p), 1)));

    std::vector<IRStmtPtr> step;
    step.push_back(ir_assign(cv[0], cols[0]));
    step.push_back(ir_if(op2(IROp::kLe, ir_var(cv[0]), ir_var(hiv[0])),
                         ir_seq(std::move(in_run)),
                         ir_assign(go, ir_bool(false))));

    body.push_back(ir_loop(
        ir_var(go),
        ir_if(op2(IROp::kLt, ir_var(p), ir_var(n)), ir_seq(std::move(step)),
              ir_assign(go, ir_bool(false)))));
  }

  const QueryPtr& root_;
  const Catalog& cat_;
  const TypedLayout& typed_;
  Kinds kinds_;

  std::vector<Ident> param_idents_;
  std::vector<std::string> param_vars_;
  std::vector<ColumnDecl> param_decls_;
  std::vector<bool> param_fixed_;
  std::vector<IRIterator> iters_;
};

}  // namespace

LoweredPlan lower(const QueryPtr& q, const Catalog& cat,
                  const TypedLayout& typed) {
  return Lowerer(q, cat, typed).run();
}

Relation run_plan(const LoweredPlan& plan, const std::vector<uint8_t>& buffer,
                  const Tuple& params, const RunLimits& limits) {
  std::vector<VmVal> args;
  args.reserve(plan.params.size());
  for (const Ident& id : plan.params) {
    const Value* v = params.find(id);
    if (!v) {
      throw Error("missing run-time parameter " + id.to_string());
    }
    args.push_back(VmVal::of(*v));
  }
  std::vector<VmVal> rows = run_ir(plan.program, buffer, args, limits);
  Relation out;
  out.schema = plan.schema;
  out.rows.reserve(rows.size());
  for (const VmVal& r : rows) {
    if (r.kind != VmVal::Kind::kTuple ||
        r.elems.size() != plan.schema.size()) {
      throw Error("reader yielded a row of the wrong shape");
    }
    Tuple t;
    for (size_t j = 0; j < r.elems.size(); ++j) {
      if (r.elems[j].kind != VmVal::Kind::kVal) {
        throw Error("reader yielded a non-scalar field");
      }
      t.bind(plan.schema[j], r.elems[j].v);
    }
    out.rows.push_back(std::move(t));
  }
  return out;
}

}  // namespace strata

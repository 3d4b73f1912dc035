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

#include "strata/ir.hpp"

#include <map>
#include <sstream>

namespace strata {

// --- Runtime values ----------------------------------------------------------

bool operator==(const VmVal& a, const VmVal& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case VmVal::Kind::kUnit:
      return true;
    case VmVal::Kind::kVal:
      return Value::compare_total(a.v, b.v) == 0 && a.v.kind() == b.v.kind();
    case VmVal::Kind::kTuple:
      return a.elems == b.elems;
  }
  return false;
}

std::string VmVal::to_string() const {
  switch (kind) {
    case Kind::kUnit:
      return "()";
    case Kind::kVal:
      return v.to_text();
    case Kind::kTuple: {
      std::string out = "(";
      for (size_t i = 0; i < elems.size(); ++i) {
        if (i) out += ", ";
        out += elems[i].to_string();
      }
      return out + ")";
    }
  }
  return "?";
}

// --- Hashing -----------------------------------------------------------------

namespace {

uint64_t splitmix_fin(uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

void put_le64(std::string& out, uint64_t u) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(u >> (8 * i)));
}

}  // namespace

uint64_t hash_bytes(uint64_t seed, const std::string& bytes) {
  uint64_t h = 14695981039346656037ULL;  // FNV-1a offset basis
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;  // FNV-1a prime
  }
  h ^= seed + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return splitmix_fin(h);
}

void encode_val_for_hash(std::string& out, const VmVal& v) {
  switch (v.kind) {
    case VmVal::Kind::kUnit:
      out.push_back('u');
      return;
    case VmVal::Kind::kTuple:
      out.push_back('t');
      out.push_back(static_cast<char>(v.elems.size()));
      for (const VmVal& e : v.elems) encode_val_for_hash(out, e);
      return;
    case VmVal::Kind::kVal:
      break;
  }
  const Value& val = v.v;
  switch (val.kind()) {
    case ValueKind::kNull:
      out.push_back('n');
      return;
    case ValueKind::kBool:
      out.push_back('b');
      out.push_back(val.as_bool() ? 1 : 0);
      return;
    case ValueKind::kString:
      out.push_back('s');
      put_le64(out, val.as_string().size());
      out += val.as_string();
      return;
    case ValueKind::kDate:
      out.push_back('d');
      put_le64(out, static_cast<uint64_t>(val.days()));
      return;
    case ValueKind::kInt:
      out.push_back('i');
      put_le64(out, static_cast<uint64_t>(val.as_int()));
      return;
    case ValueKind::kFixed: {
      // Normalize so numerically equal values share an encoding: 5.0 hashes
      // like 5, 12.50 like 12.5.
      int64_t num = val.numerator();
      int scale = val.scale();
      while (scale > 0 && num % 10 == 0) {
        num /= 10;
        --scale;
      }
      if (scale == 0) {
        out.push_back('i');
        put_le64(out, static_cast<uint64_t>(num));
      } else {
        out.push_back('f');
        put_le64(out, static_cast<uint64_t>(num));
        out.push_back(static_cast<char>(scale));
      }
      return;
    }
  }
}

uint64_t hash_vals(uint64_t seed, const std::vector<VmVal>& vals) {
  std::string enc;
  for (const VmVal& v : vals) encode_val_for_hash(enc, v);
  return hash_bytes(seed, enc);
}

// --- Types -------------------------------------------------------------------

bool operator==(const IRType& a, const IRType& b) {
  return a.kind == b.kind && a.elems == b.elems;
}

std::string IRType::to_string() const {
  switch (kind) {
    case Kind::kUnit: return "unit";
    case Kind::kInt: return "int";
    case Kind::kBool: return "bool";
    case Kind::kBytes: return "bytes";
    case Kind::kTuple: {
      std::string out = "tuple<";
      for (size_t i = 0; i < elems.size(); ++i) {
        if (i) out += ", ";
        out += elems[i].to_string();
      }
      return out + ">";
    }
    case Kind::kIter:
      return "iter<" + (elems.empty() ? std::string("?") : elems[0].to_string()) +
             ">";
  }
  return "?";
}

// --- Constructors ------------------------------------------------------------

namespace {

IRExprPtr mk_expr(IRExpr e) { return std::make_shared<const IRExpr>(std::move(e)); }
IRStmtPtr mk_stmt(IRStmt s) { return std::make_shared<const IRStmt>(std::move(s)); }

}  // namespace

IRExprPtr ir_var(std::string name) {
  IRExpr e;
  e.kind = IRExpr::Kind::kVar;
  e.name = std::move(name);
  return mk_expr(std::move(e));
}

IRExprPtr ir_int(int64_t v) {
  IRExpr e;
  e.kind = IRExpr::Kind::kInt;
  e.i = v;
  return mk_expr(std::move(e));
}

IRExprPtr ir_bool(bool v) {
  IRExpr e;
  e.kind = IRExpr::Kind::kBool;
  e.b = v;
  return mk_expr(std::move(e));
}

IRExprPtr ir_const(VmVal v, IRType t) {
  IRExpr e;
  e.kind = IRExpr::Kind::kConst;
  e.cval = std::move(v);
  e.ctype = std::move(t);
  return mk_expr(std::move(e));
}

IRExprPtr ir_op(IROp op, std::vector<IRExprPtr> args) {
  IRExpr e;
  e.kind = IRExpr::Kind::kOp;
  e.op = op;
  e.args = std::move(args);
  return mk_expr(std::move(e));
}

IRExprPtr ir_index(IRExprPtr tuple, int index) {
  IRExpr e;
  e.kind = IRExpr::Kind::kIndex;
  e.args = {std::move(tuple)};
  e.index = index;
  return mk_expr(std::move(e));
}

IRExprPtr ir_done(std::string iter) {
  IRExpr e;
  e.kind = IRExpr::Kind::kDone;
  e.name = std::move(iter);
  return mk_expr(std::move(e));
}

IRExprPtr ir_slice(IRExprPtr pos, IRExprPtr len) {
  IRExpr e;
  e.kind = IRExpr::Kind::kSlice;
  e.args = {std::move(pos), std::move(len)};
  return mk_expr(std::move(e));
}

IRStmtPtr ir_loop(IRExprPtr cond, IRStmtPtr body) {
  IRStmt s;
  s.kind = IRStmt::Kind::kLoop;
  s.cond = std::move(cond);
  s.body = std::move(body);
  return mk_stmt(std::move(s));
}

IRStmtPtr ir_if(IRExprPtr cond, IRStmtPtr then_s, IRStmtPtr else_s) {
  IRStmt s;
  s.kind = IRStmt::Kind::kIf;
  s.cond = std::move(cond);
  s.body = std::move(then_s);
  s.els = std::move(else_s);
  return mk_stmt(std::move(s));
}

IRStmtPtr ir_seq(std::vector<IRStmtPtr> stmts) {
  IRStmt s;
  s.kind = IRStmt::Kind::kSeq;
  s.stmts = std::move(stmts);
  return mk_stmt(std::move(s));
}

IRStmtPtr ir_assign(std::string var, IRExprPtr e) {
  IRStmt s;
  s.kind = IRStmt::Kind::kAssign;
  s.var = std::move(var);
  s.expr = std::move(e);
  return mk_stmt(std::move(s));
}

IRStmtPtr ir_next(std::string var, std::string iter) {
  IRStmt s;
  s.kind = IRStmt::Kind::kNext;
  s.var = std::move(var);
  s.iter = std::move(iter);
  return mk_stmt(std::move(s));
}

IRStmtPtr ir_init(std::string iter, std::vector<IRExprPtr> args) {
  IRStmt s;
  s.kind = IRStmt::Kind::kInit;
  s.iter = std::move(iter);
  s.args = std::move(args);
  return mk_stmt(std::move(s));
}

IRStmtPtr ir_yield(IRExprPtr e) {
  IRStmt s;
  s.kind = IRStmt::Kind::kYield;
  s.expr = std::move(e);
  return mk_stmt(std::move(s));
}

IRStmtPtr ir_skip() {
  IRStmt s;
  s.kind = IRStmt::Kind::kSkip;
  return mk_stmt(std::move(s));
}

const char* ir_op_name(IROp op) {
  switch (op) {
    case IROp::kAdd: return "+";
    case IROp::kSub: return "-";
    case IROp::kMul: return "*";
    case IROp::kDiv: return "/";
    case IROp::kMod: return "%";
    case IROp::kEq: return "=";
    case IROp::kLt: return "<";
    case IROp::kLe: return "<=";
    case IROp::kGt: return ">";
    case IROp::kGe: return ">=";
    case IROp::kAnd: return "&&";
    case IROp::kOr: return "||";
    case IROp::kNot: return "!";
    case IROp::kToInt: return "toint";
    case IROp::kToBool: return "tobool";
    case IROp::kToFixed: return "tofixed";
    case IROp::kToDate: return "todate";
    case IROp::kLoadBytes: return "loadbytes";
    case IROp::kHash: return "hash";
    case IROp::kMakeTuple: return "maketuple";
    case IROp::kCond: return "cond";
    case IROp::kIsNull: return "isnull";
  }
  return "?";
}

const IRIterator* IRProgram::find(const std::string& name) const {
  for (const auto& it : iters) {
    if (it.name == name) return &it;
  }
  return nullptr;
}

// --- Typechecking ------------------------------------------------------------
//
// The language has no type annotations, so local, parameter, and yield types
// are inferred first: a monotone fixpoint that records the first type each
// variable is seen with (from assignments, next-statements, and init call
// sites).  A second pass then re-traverses every body with the final
// environment and reports violations, naming the rule that failed.

namespace {

using TK = IRType::Kind;

bool scalarish(const IRType& t) {
  return t.kind == TK::kInt || t.kind == TK::kBool || t.kind == TK::kBytes;
}

// Result type of `op` on `args`; nullopt when some argument is unknown.
// On a genuine mismatch, sets *err and returns nullopt as well (the caller
// distinguishes by checking whether any argument was unknown).
std::optional<IRType> op_result(IROp op,
                                const std::vector<std::optional<IRType>>& args,
                                std::string* err) {
  auto fail = [&](const std::string& m) -> std::optional<IRType> {
    if (err) *err = m;
    return std::nullopt;
  };
  auto want = [&](size_t n) {
    return args.size() == n;
  };
  for (const auto& a : args) {
    if (!a) return std::nullopt;  // unknown argument, stay silent
  }
  switch (op) {
    case IROp::kAdd:
    case IROp::kSub:
    case IROp::kMul:
    case IROp::kDiv:
    case IROp::kMod:
      if (!want(2) || args[0]->kind != TK::kInt || args[1]->kind != TK::kInt) {
        return fail(std::string("operator ") + ir_op_name(op) +
                    " expects two int operands");
      }
      return IRType::integer();
    case IROp::kEq:
    case IROp::kLt:
    case IROp::kLe:
    case IROp::kGt:
    case IROp::kGe: {
      if (!want(2) || !(*args[0] == *args[1]) || !scalarish(*args[0]) ||
          (op != IROp::kEq && args[0]->kind == TK::kBool)) {
        return fail(std::string("comparison ") + ir_op_name(op) +
                    " expects two matching scalar operands");
      }
      return IRType::boolean();
    }
    case IROp::kAnd:
    case IROp::kOr:
      if (!want(2) || args[0]->kind != TK::kBool || args[1]->kind != TK::kBool) {
        return fail(std::string("operator ") + ir_op_name(op) +
                    " expects two bool operands");
      }
      return IRType::boolean();
    case IROp::kNot:
      if (!want(1) || args[0]->kind != TK::kBool) {
        return fail("operator ! expects one bool operand");
      }
      return IRType::boolean();
    case IROp::kToInt:
      if (!want(1) || args[0]->kind != TK::kBytes) {
        return fail("toint expects one bytes operand");
      }
      return IRType::integer();
    case IROp::kToBool:
      if (!want(1) || args[0]->kind != TK::kBytes) {
        return fail("tobool expects one bytes operand");
      }
      return IRType::boolean();
    case IROp::kToFixed:
      if (!want(2) || args[0]->kind != TK::kInt || args[1]->kind != TK::kInt) {
        return fail("tofixed expects (int numerator, int scale)");
      }
      return IRType::integer();
    case IROp::kToDate:
      if (!want(1) || args[0]->kind != TK::kInt) {
        return fail("todate expects one int operand");
      }
      return IRType::integer();
    case IROp::kLoadBytes:
      if (!want(2) || args[0]->kind != TK::kInt || args[1]->kind != TK::kInt) {
        return fail("loadbytes expects (int pos, int len)");
      }
      return IRType::bytes();
    case IROp::kHash: {
      if (args.empty() || args[0]->kind != TK::kInt) {
        return fail("hash expects an int seed first");
      }
      for (size_t i = 1; i < args.size(); ++i) {
        if (!scalarish(*args[i])) {
          return fail("hash arguments must be scalar");
        }
      }
      return IRType::integer();
    }
    case IROp::kMakeTuple: {
      std::vector<IRType> elems;
      for (const auto& a : args) elems.push_back(*a);
      return IRType::tuple(std::move(elems));
    }
    case IROp::kCond:
      if (!want(3) || args[0]->kind != TK::kBool || !(*args[1] == *args[2])) {
        return fail("cond expects (bool, t, t) with matching branches");
      }
      return *args[1];
    case IROp::kIsNull:
      if (!want(1) || !scalarish(*args[0])) {
        return fail("isnull expects one scalar operand");
      }
      return IRType::boolean();
  }
  return fail("unknown operator");
}

struct IterState {
  std::map<std::string, IRType> vars;
  std::optional<IRType> yield;
};

class Checker {
 public:
  explicit Checker(const IRProgram& p) : p_(p) {}

  std::vector<IRDiag> run() {
    for (size_t i = 0; i < p_.iters.size(); ++i) {
      if (!index_.emplace(p_.iters[i].name, i).second) {
        diags_.push_back({"ST-Init", "program",
                          "duplicate iterator name '" + p_.iters[i].name + "'"});
      }
    }
    state_.resize(p_.iters.size());
    auto entry = index_.find(p_.entry);
    if (entry == index_.end()) {
      diags_.push_back({"ST-Init", "program",
                        "entry iterator '" + p_.entry + "' is not declared"});
    } else {
      // Seed the entry iterator's parameter types from the declaration.
      const IRIterator& e = p_.iters[entry->second];
      for (size_t i = 0; i < e.params.size() && i < p_.entry_params.size();
           ++i) {
        state_[entry->second].vars.emplace(e.params[i], p_.entry_params[i]);
      }
    }
    // Inference fixpoint: only ever adds var/yield types, so it terminates.
    changed_ = true;
    int guard = static_cast<int>(p_.iters.size()) * 4 + 8;
    while (changed_ && guard-- > 0) {
      changed_ = false;
      for (size_t i = 0; i < p_.iters.size(); ++i) {
        infer_stmt(i, p_.iters[i].body);
      }
    }
    // Checking pass with the final environment.
    for (size_t i = 0; i < p_.iters.size(); ++i) {
      iter_name_ = p_.iters[i].name;
      check_stmt(i, p_.iters[i].body, "/");
    }
    return std::move(diags_);
  }

 private:
  // -- inference (silent) --
  void learn(size_t it, const std::string& var, const IRType& t) {
    auto [pos, inserted] = state_[it].vars.emplace(var, t);
    (void)pos;
    if (inserted) changed_ = true;
  }

  void learn_yield(size_t it, const IRType& t) {
    if (!state_[it].yield) {
      state_[it].yield = t;
      changed_ = true;
    }
  }

  std::optional<IRType> try_expr(size_t it, const IRExprPtr& e) {
    switch (e->kind) {
      case IRExpr::Kind::kVar: {
        auto pos = state_[it].vars.find(e->name);
        if (pos == state_[it].vars.end()) return std::nullopt;
        return pos->second;
      }
      case IRExpr::Kind::kInt: return IRType::integer();
      case IRExpr::Kind::kBool: return IRType::boolean();
      case IRExpr::Kind::kConst: return e->ctype;
      case IRExpr::Kind::kOp: {
        std::vector<std::optional<IRType>> args;
        for (const auto& a : e->args) args.push_back(try_expr(it, a));
        return op_result(e->op, args, nullptr);
      }
      case IRExpr::Kind::kIndex: {
        auto t = try_expr(it, e->args[0]);
        if (!t || t->kind != TK::kTuple) return std::nullopt;
        if (e->index < 0 || static_cast<size_t>(e->index) >= t->elems.size()) {
          return std::nullopt;
        }
        return t->elems[e->index];
      }
      case IRExpr::Kind::kDone: return IRType::boolean();
      case IRExpr::Kind::kSlice: return IRType::bytes();
    }
    return std::nullopt;
  }

  void infer_stmt(size_t it, const IRStmtPtr& s) {
    if (!s) return;
    switch (s->kind) {
      case IRStmt::Kind::kSeq:
        for (const auto& c : s->stmts) infer_stmt(it, c);
        return;
      case IRStmt::Kind::kLoop:
        infer_stmt(it, s->body);
        return;
      case IRStmt::Kind::kIf:
        infer_stmt(it, s->body);
        infer_stmt(it, s->els);
        return;
      case IRStmt::Kind::kAssign: {
        if (auto t = try_expr(it, s->expr)) learn(it, s->var, *t);
        return;
      }
      case IRStmt::Kind::kNext: {
        auto pos = index_.find(s->iter);
        if (pos != index_.end() && state_[pos->second].yield) {
          learn(it, s->var, *state_[pos->second].yield);
        }
        return;
      }
      case IRStmt::Kind::kInit: {
        auto pos = index_.find(s->iter);
        if (pos == index_.end()) return;
        const IRIterator& target = p_.iters[pos->second];
        for (size_t i = 0; i < s->args.size() && i < target.params.size(); ++i) {
          if (auto t = try_expr(it, s->args[i])) {
            learn(pos->second, target.params[i], *t);
          }
        }
        return;
      }
      case IRStmt::Kind::kYield: {
        if (auto t = try_expr(it, s->expr)) learn_yield(it, *t);
        return;
      }
      case IRStmt::Kind::kSkip:
        return;
    }
  }

  // -- checking (reports) --
  void diag(const std::string& rule, const std::string& where,
            const std::string& message) {
    diags_.push_back({rule, "iter " + iter_name_ + ", stmt " + where, message});
  }

  std::optional<IRType> check_expr(size_t it, const IRExprPtr& e,
                                   const std::string& where) {
    switch (e->kind) {
      case IRExpr::Kind::kVar: {
        auto pos = state_[it].vars.find(e->name);
        if (pos == state_[it].vars.end()) {
          diag("ET-Var", where, "variable '" + e->name + "' is not bound");
          return std::nullopt;
        }
        return pos->second;
      }
      case IRExpr::Kind::kInt:
        return IRType::integer();
      case IRExpr::Kind::kBool:
        return IRType::boolean();
      case IRExpr::Kind::kConst:
        return e->ctype;
      case IRExpr::Kind::kOp: {
        std::vector<std::optional<IRType>> args;
        bool unknown = false;
        for (const auto& a : e->args) {
          args.push_back(check_expr(it, a, where));
          unknown = unknown || !args.back();
        }
        std::string err;
        auto t = op_result(e->op, args, &err);
        if (!t && !unknown) diag("ET-Op", where, err);
        return t;
      }
      case IRExpr::Kind::kIndex: {
        auto t = check_expr(it, e->args[0], where);
        if (!t) return std::nullopt;
        if (t->kind != TK::kTuple) {
          diag("ET-Index", where,
               "indexed expression has type " + t->to_string() + ", not tuple");
          return std::nullopt;
        }
        if (e->index < 0 || static_cast<size_t>(e->index) >= t->elems.size()) {
          diag("ET-Index", where,
               "index " + std::to_string(e->index) + " out of range for " +
                   t->to_string());
          return std::nullopt;
        }
        return t->elems[e->index];
      }
      case IRExpr::Kind::kDone: {
        if (!index_.count(e->name)) {
          diag("ET-Done", where, "'" + e->name + "' is not an iterator");
          return std::nullopt;
        }
        return IRType::boolean();
      }
      case IRExpr::Kind::kSlice: {
        auto p = check_expr(it, e->args[0], where);
        auto l = check_expr(it, e->args[1], where);
        bool ok = (!p || p->kind == TK::kInt) && (!l || l->kind == TK::kInt);
        if (!ok) {
          diag("ET-Read", where, "slice bounds must be ints");
          return std::nullopt;
        }
        return IRType::bytes();
      }
    }
    return std::nullopt;
  }

  void check_cond(size_t it, const IRExprPtr& e, const std::string& where,
                  const char* rule) {
    auto t = check_expr(it, e, where);
    if (t && t->kind != TK::kBool) {
      diag(rule, where, "condition has type " + t->to_string() + ", not bool");
    }
  }

  void check_stmt(size_t it, const IRStmtPtr& s, const std::string& where) {
    if (!s) return;
    switch (s->kind) {
      case IRStmt::Kind::kSeq: {
        for (size_t i = 0; i < s->stmts.size(); ++i) {
          std::string w = where == "/" ? "/" + std::to_string(i)
                                       : where + "/" + std::to_string(i);
          check_stmt(it, s->stmts[i], w);
        }
        return;
      }
      case IRStmt::Kind::kLoop:
        check_cond(it, s->cond, where, "ST-Loop");
        check_stmt(it, s->body, where + "/body");
        return;
      case IRStmt::Kind::kIf:
        check_cond(it, s->cond, where, "ST-If");
        check_stmt(it, s->body, where + "/then");
        check_stmt(it, s->els, where + "/else");
        return;
      case IRStmt::Kind::kAssign: {
        auto t = check_expr(it, s->expr, where);
        if (!t) return;
        auto pos = state_[it].vars.find(s->var);
        if (pos != state_[it].vars.end() && !(pos->second == *t)) {
          diag("ST-Assign", where,
               "variable '" + s->var + "' holds " + pos->second.to_string() +
                   " but is assigned " + t->to_string());
        }
        return;
      }
      case IRStmt::Kind::kNext: {
        auto pos = index_.find(s->iter);
        if (pos == index_.end()) {
          diag("ST-Next", where, "'" + s->iter + "' is not an iterator");
          return;
        }
        const auto& y = state_[pos->second].yield;
        auto var = state_[it].vars.find(s->var);
        if (y && var != state_[it].vars.end() && !(var->second == *y)) {
          diag("ST-Next", where,
               "variable '" + s->var + "' holds " + var->second.to_string() +
                   " but iterator '" + s->iter + "' yields " + y->to_string());
        }
        return;
      }
      case IRStmt::Kind::kInit: {
        auto pos = index_.find(s->iter);
        if (pos == index_.end()) {
          diag("ST-Init", where, "'" + s->iter + "' is not an iterator");
          return;
        }
        const IRIterator& target = p_.iters[pos->second];
        if (s->args.size() != target.params.size()) {
          diag("ST-Init", where,
               "iterator '" + s->iter + "' takes " +
                   std::to_string(target.params.size()) + " arguments, got " +
                   std::to_string(s->args.size()));
          return;
        }
        for (size_t i = 0; i < s->args.size(); ++i) {
          auto t = check_expr(it, s->args[i], where);
          auto want = state_[pos->second].vars.find(target.params[i]);
          if (t && want != state_[pos->second].vars.end() &&
              !(want->second == *t)) {
            diag("ST-Init", where,
                 "argument " + std::to_string(i) + " of '" + s->iter +
                     "' has type " + t->to_string() + ", expected " +
                     want->second.to_string());
          }
        }
        return;
      }
      case IRStmt::Kind::kYield: {
        auto t = check_expr(it, s->expr, where);
        const auto& y = state_[it].yield;
        if (t && y && !(*t == *y)) {
          diag("ST-Seq2", where,
               "iterator yields both " + y->to_string() + " and " +
                   t->to_string());
        }
        return;
      }
      case IRStmt::Kind::kSkip:
        return;
    }
  }

  const IRProgram& p_;
  std::map<std::string, size_t> index_;
  std::vector<IterState> state_;
  std::vector<IRDiag> diags_;
  std::string iter_name_;
  bool changed_ = false;
};

}  // namespace

std::vector<IRDiag> typecheck_ir(const IRProgram& p) {
  return Checker(p).run();
}

void require_well_typed(const IRProgram& p) {
  auto diags = typecheck_ir(p);
  if (diags.empty()) return;
  std::string msg = "ill-typed program:";
  for (const auto& d : diags) msg += "\n  " + d.to_string();
  throw Error(msg);
}

// --- Execution ---------------------------------------------------------------

namespace {

struct Instr {
  enum class Code : uint8_t {
    kAssign, kJump, kBranchFalse, kYield, kNext, kInit, kEnd
  };
  Code code = Code::kEnd;
  IRExprPtr expr;                // kAssign value / kBranchFalse cond / kYield
  int var = -1;                  // local slot (kAssign, kNext)
  int target = -1;               // kJump / kBranchFalse
  int iter = -1;                 // kNext / kInit
  std::vector<IRExprPtr> args;   // kInit
};

struct CompiledIter {
  const IRIterator* decl = nullptr;
  std::vector<Instr> instrs;
  std::map<std::string, int> slots;  // var name -> local index
  int nslots = 0;
};

struct Frame {
  std::vector<std::optional<VmVal>> locals;
  size_t pc = 0;
  bool live = false;      // initialized at least once
  bool done = false;      // last pull hit exhaustion
  bool finished = false;  // body ran to completion
};

class Vm {
 public:
  Vm(const IRProgram& p, const std::vector<uint8_t>& buffer,
     const RunLimits& limits)
      : p_(p), buf_(buffer), limits_(limits) {
    for (size_t i = 0; i < p.iters.size(); ++i) {
      index_.emplace(p.iters[i].name, static_cast<int>(i));
    }
    comp_.resize(p.iters.size());
    for (size_t i = 0; i < p.iters.size(); ++i) compile(i);
    frames_.resize(p.iters.size());
  }

  std::vector<VmVal> run(const std::vector<VmVal>& args) {
    auto entry = index_.find(p_.entry);
    if (entry == index_.end()) {
      throw Error("entry iterator '" + p_.entry + "' is not declared");
    }
    int e = entry->second;
    if (args.size() != p_.iters[e].params.size()) {
      throw Error("entry iterator '" + p_.entry + "' takes " +
                  std::to_string(p_.iters[e].params.size()) +
                  " arguments, got " + std::to_string(args.size()));
    }
    start(e, args);
    std::vector<VmVal> rows;
    while (auto v = pull(e)) rows.push_back(std::move(*v));
    return rows;
  }

 private:
  void compile(size_t i) {
    CompiledIter& c = comp_[i];
    c.decl = &p_.iters[i];
    for (const auto& pr : c.decl->params) slot(c, pr);
    flatten(c, c.decl->body);
    Instr end;
    end.code = Instr::Code::kEnd;
    c.instrs.push_back(std::move(end));
  }

  int slot(CompiledIter& c, const std::string& name) {
    auto pos = c.slots.find(name);
    if (pos != c.slots.end()) return pos->second;
    int s = c.nslots++;
    c.slots.emplace(name, s);
    return s;
  }

  int iter_index(const std::string& name) {
    auto pos = index_.find(name);
    if (pos == index_.end()) {
      throw Error("undeclared iterator '" + name + "'");
    }
    return pos->second;
  }

  void flatten(CompiledIter& c, const IRStmtPtr& s) {
    if (!s) return;
    switch (s->kind) {
      case IRStmt::Kind::kSeq:
        for (const auto& child : s->stmts) flatten(c, child);
        return;
      case IRStmt::Kind::kSkip:
        return;
      case IRStmt::Kind::kAssign: {
        Instr in;
        in.code = Instr::Code::kAssign;
        in.expr = s->expr;
        in.var = slot(c, s->var);
        c.instrs.push_back(std::move(in));
        return;
      }
      case IRStmt::Kind::kNext: {
        Instr in;
        in.code = Instr::Code::kNext;
        in.var = slot(c, s->var);
        in.iter = iter_index(s->iter);
        c.instrs.push_back(std::move(in));
        return;
      }
      case IRStmt::Kind::kInit: {
        Instr in;
        in.code = Instr::Code::kInit;
        in.iter = iter_index(s->iter);
        in.args = s->args;
        c.instrs.push_back(std::move(in));
        return;
      }
      case IRStmt::Kind::kYield: {
        Instr in;
        in.code = Instr::Code::kYield;
        in.expr = s->expr;
        c.instrs.push_back(std::move(in));
        return;
      }
      case IRStmt::Kind::kLoop: {
        size_t top = c.instrs.size();
        Instr br;
        br.code = Instr::Code::kBranchFalse;
        br.expr = s->cond;
        c.instrs.push_back(std::move(br));
        size_t brpos = c.instrs.size() - 1;
        flatten(c, s->body);
        Instr jmp;
        jmp.code = Instr::Code::kJump;
        jmp.target = static_cast<int>(top);
        c.instrs.push_back(std::move(jmp));
        c.instrs[brpos].target = static_cast<int>(c.instrs.size());
        return;
      }
      case IRStmt::Kind::kIf: {
        Instr br;
        br.code = Instr::Code::kBranchFalse;
        br.expr = s->cond;
        c.instrs.push_back(std::move(br));
        size_t brpos = c.instrs.size() - 1;
        flatten(c, s->body);
        Instr jmp;
        jmp.code = Instr::Code::kJump;
        c.instrs.push_back(std::move(jmp));
        size_t jmppos = c.instrs.size() - 1;
        c.instrs[brpos].target = static_cast<int>(c.instrs.size());
        flatten(c, s->els);
        c.instrs[jmppos].target = static_cast<int>(c.instrs.size());
        return;
      }
    }
  }

  [[noreturn]] void trap(const std::string& rule, const std::string& msg,
                         int iter, size_t pc) {
    throw IRTrap("trap: " + rule + ": " + msg + " (iter '" +
                 p_.iters[iter].name + "', pc " + std::to_string(pc) + ")");
  }

  void bump() {
    if (++steps_ > limits_.max_steps) {
      throw IRTrap("trap: step budget of " + std::to_string(limits_.max_steps) +
                   " exceeded");
    }
  }

  void start(int i, const std::vector<VmVal>& args) {
    Frame& fr = frames_[i];
    fr.locals.assign(comp_[i].nslots, std::nullopt);
    for (size_t a = 0; a < args.size(); ++a) {
      fr.locals[comp_[i].slots.at(comp_[i].decl->params[a])] = args[a];
    }
    fr.pc = 0;
    fr.live = true;
    fr.done = false;
    fr.finished = false;
  }

  // Runs iterator i until its next yield (returned) or exhaustion (nullopt,
  // done flag set).
  std::optional<VmVal> pull(int i) {
    Frame& fr = frames_[i];
    if (!fr.live) trap("S-Init", "next on uninitialized iterator", i, 0);
    if (fr.finished) {
      fr.done = true;
      return std::nullopt;
    }
    const auto& instrs = comp_[i].instrs;
    while (true) {
      bump();
      Instr const& in = instrs[fr.pc];
      switch (in.code) {
        case Instr::Code::kAssign:
          fr.locals[in.var] = eval(in.expr, i);
          ++fr.pc;
          break;
        case Instr::Code::kJump:
          fr.pc = static_cast<size_t>(in.target);
          break;
        case Instr::Code::kBranchFalse: {
          VmVal c = eval(in.expr, i);
          // A null condition selects the false branch, mirroring filters.
          bool truthy = c.kind == VmVal::Kind::kVal && !c.v.is_null() &&
                        c.v.kind() == ValueKind::kBool && c.v.as_bool();
          if (truthy) {
            ++fr.pc;
          } else {
            fr.pc = static_cast<size_t>(in.target);
          }
          break;
        }
        case Instr::Code::kYield: {
          VmVal v = eval(in.expr, i);
          ++fr.pc;
          return v;
        }
        case Instr::Code::kNext: {
          std::optional<VmVal> v = pull(in.iter);
          if (v) fr.locals[in.var] = std::move(*v);
          ++fr.pc;
          break;
        }
        case Instr::Code::kInit: {
          std::vector<VmVal> args;
          args.reserve(in.args.size());
          for (const auto& a : in.args) args.push_back(eval(a, i));
          if (args.size() != comp_[in.iter].decl->params.size()) {
            trap("ST-Init", "argument count mismatch", i, fr.pc);
          }
          start(in.iter, args);
          ++fr.pc;
          break;
        }
        case Instr::Code::kEnd:
          fr.finished = true;
          fr.done = true;
          return std::nullopt;
      }
    }
  }

  VmVal eval(const IRExprPtr& e, int i) {
    Frame& fr = frames_[i];
    switch (e->kind) {
      case IRExpr::Kind::kVar: {
        auto pos = comp_[i].slots.find(e->name);
        if (pos == comp_[i].slots.end() || !fr.locals[pos->second]) {
          trap("ET-Var", "read of unassigned variable '" + e->name + "'", i,
               fr.pc);
        }
        return *fr.locals[pos->second];
      }
      case IRExpr::Kind::kInt:
        return VmVal::of(Value::integer(e->i));
      case IRExpr::Kind::kBool:
        return VmVal::of(Value::boolean(e->b));
      case IRExpr::Kind::kConst:
        return e->cval;
      case IRExpr::Kind::kOp: {
        if (e->op == IROp::kCond) {
          // Lazy, so a guarded branch (say a division) is never evaluated
          // when the guard selects the other one; a null guard picks `else`.
          VmVal c = eval(e->args[0], i);
          if (c.kind != VmVal::Kind::kVal ||
              (!c.v.is_null() && c.v.kind() != ValueKind::kBool)) {
            trap("ET-Op", "if condition is not a boolean", i, fr.pc);
          }
          if (c.v.is_null() || !c.v.as_bool()) return eval(e->args[2], i);
          return eval(e->args[1], i);
        }
        std::vector<VmVal> args;
        args.reserve(e->args.size());
        for (const auto& a : e->args) args.push_back(eval(a, i));
        return apply_op(e->op, std::move(args), i);
      }
      case IRExpr::Kind::kIndex: {
        VmVal t = eval(e->args[0], i);
        if (t.kind != VmVal::Kind::kTuple) {
          trap("ET-Index", "indexed value is not a tuple", i, fr.pc);
        }
        if (e->index < 0 || static_cast<size_t>(e->index) >= t.elems.size()) {
          trap("ET-Index", "index out of range", i, fr.pc);
        }
        return t.elems[e->index];
      }
      case IRExpr::Kind::kDone: {
        int j = index_.at(e->name);
        if (!frames_[j].live) {
          trap("E-Done", "done on uninitialized iterator '" + e->name + "'", i,
               fr.pc);
        }
        return VmVal::of(Value::boolean(frames_[j].done));
      }
      case IRExpr::Kind::kSlice: {
        int64_t p = expect_int(eval(e->args[0], i), i);
        int64_t l = expect_int(eval(e->args[1], i), i);
        if (l <= 0 || l > 8 || p < 0 ||
            p + l > static_cast<int64_t>(buf_.size())) {
          trap("E-Read",
               "slice [" + std::to_string(p) + " : " + std::to_string(l) +
                   "] outside buffer of " + std::to_string(buf_.size()) +
                   " bytes",
               i, fr.pc);
        }
        return VmVal::of(Value::string(std::string(
            reinterpret_cast<const char*>(buf_.data()) + p, l)));
      }
    }
    trap("ET-Op", "unreachable expression", i, fr.pc);
  }

  int64_t expect_int(const VmVal& v, int i) {
    if (v.kind != VmVal::Kind::kVal || v.v.kind() != ValueKind::kInt) {
      trap("ET-Op", "expected an int value, got " + v.to_string(), i,
           frames_[i].pc);
    }
    return v.v.as_int();
  }

  const std::string& expect_bytes(const VmVal& v, int i) {
    if (v.kind != VmVal::Kind::kVal || v.v.kind() != ValueKind::kString) {
      trap("ET-Op", "expected bytes, got " + v.to_string(), i, frames_[i].pc);
    }
    return v.v.as_string();
  }

  VmVal apply_op(IROp op, std::vector<VmVal> args, int i) {
    auto binop = [&](BinOp b) {
      if (args.size() != 2 || args[0].kind != VmVal::Kind::kVal ||
          args[1].kind != VmVal::Kind::kVal) {
        trap("ET-Op", std::string("operator ") + ir_op_name(op) +
                          " expects two scalar values", i, frames_[i].pc);
      }
      try {
        return VmVal::of(eval_binop(b, args[0].v, args[1].v));
      } catch (const Error& e) {
        trap("ET-Op", e.what(), i, frames_[i].pc);
      }
    };
    switch (op) {
      case IROp::kAdd: return binop(BinOp::kAdd);
      case IROp::kSub: return binop(BinOp::kSub);
      case IROp::kMul: return binop(BinOp::kMul);
      case IROp::kDiv: return binop(BinOp::kDiv);
      case IROp::kMod: return binop(BinOp::kMod);
      case IROp::kEq: return binop(BinOp::kEq);
      case IROp::kLt: return binop(BinOp::kLt);
      case IROp::kLe: return binop(BinOp::kLe);
      case IROp::kGt: return binop(BinOp::kGt);
      case IROp::kGe: return binop(BinOp::kGe);
      case IROp::kAnd: return binop(BinOp::kAnd);
      case IROp::kOr: return binop(BinOp::kOr);
      case IROp::kNot: {
        if (args.size() != 1 || args[0].kind != VmVal::Kind::kVal) {
          trap("ET-Op", "! expects one scalar value", i, frames_[i].pc);
        }
        try {
          return VmVal::of(eval_not(args[0].v));
        } catch (const Error& e) {
          trap("ET-Op", e.what(), i, frames_[i].pc);
        }
      }
      case IROp::kToInt: {
        const std::string& b = expect_bytes(args.at(0), i);
        if (b.empty() || b.size() > 8) {
          trap("ET-Op", "toint needs 1..8 bytes", i, frames_[i].pc);
        }
        uint64_t u = 0;
        for (size_t k = 0; k < b.size(); ++k) {
          u |= static_cast<uint64_t>(static_cast<uint8_t>(b[k])) << (8 * k);
        }
        if (b.size() < 8 &&
            (static_cast<uint8_t>(b.back()) & 0x80) != 0) {
          u |= ~uint64_t{0} << (8 * b.size());  // sign extend
        }
        return VmVal::of(Value::integer(static_cast<int64_t>(u)));
      }
      case IROp::kToBool: {
        const std::string& b = expect_bytes(args.at(0), i);
        if (b.size() != 1) {
          trap("ET-Op", "tobool needs exactly 1 byte", i, frames_[i].pc);
        }
        return VmVal::of(Value::boolean(b[0] != 0));
      }
      case IROp::kToFixed: {
        int64_t num = expect_int(args.at(0), i);
        int64_t scale = expect_int(args.at(1), i);
        try {
          return VmVal::of(Value::fixed(num, static_cast<int>(scale)));
        } catch (const Error& e) {
          trap("ET-Op", e.what(), i, frames_[i].pc);
        }
      }
      case IROp::kToDate:
        return VmVal::of(Value::date(expect_int(args.at(0), i)));
      case IROp::kLoadBytes: {
        int64_t p = expect_int(args.at(0), i);
        int64_t l = expect_int(args.at(1), i);
        if (l < 0 || p < 0 || p + l > static_cast<int64_t>(buf_.size())) {
          trap("E-Read",
               "loadbytes [" + std::to_string(p) + " : " + std::to_string(l) +
                   "] outside buffer",
               i, frames_[i].pc);
        }
        return VmVal::of(Value::string(std::string(
            reinterpret_cast<const char*>(buf_.data()) + p, l)));
      }
      case IROp::kHash: {
        if (args.empty()) trap("ET-Op", "hash needs a seed", i, frames_[i].pc);
        uint64_t seed = static_cast<uint64_t>(expect_int(args[0], i));
        std::vector<VmVal> rest(args.begin() + 1, args.end());
        uint64_t h = hash_vals(seed, rest);
        // Keep the sign bit clear so modulo stays non-negative.
        return VmVal::of(
            Value::integer(static_cast<int64_t>(h & 0x7fffffffffffffffULL)));
      }
      case IROp::kMakeTuple:
        return VmVal::tuple(std::move(args));
      case IROp::kCond:
        trap("ET-Op", "cond is evaluated lazily", i, frames_[i].pc);
      case IROp::kIsNull: {
        if (args.size() != 1 || args[0].kind != VmVal::Kind::kVal) {
          trap("ET-Op", "isnull expects one scalar value", i, frames_[i].pc);
        }
        return VmVal::of(Value::boolean(args[0].v.is_null()));
      }
    }
    trap("ET-Op", "unreachable operator", i, frames_[i].pc);
  }

  const IRProgram& p_;
  const std::vector<uint8_t>& buf_;
  RunLimits limits_;
  std::map<std::string, int> index_;
  std::vector<CompiledIter> comp_;
  std::vector<Frame> frames_;
  int64_t steps_ = 0;
};

}  // namespace

std::vector<VmVal> run_ir(const IRProgram& p, const std::vector<uint8_t>& buffer,
                          const std::vector<VmVal>& args,
                          const RunLimits& limits) {
  return Vm(p, buffer, limits).run(args);
}

// --- Text form ---------------------------------------------------------------

namespace {

bool infix(IROp op) {
  switch (op) {
    case IROp::kAdd: case IROp::kSub: case IROp::kMul: case IROp::kDiv:
    case IROp::kMod: case IROp::kEq: case IROp::kLt: case IROp::kLe:
    case IROp::kGt: case IROp::kGe: case IROp::kAnd: case IROp::kOr:
      return true;
    default:
      return false;
  }
}

void print_expr_rec(std::ostringstream& os, const IRExprPtr& e) {
  switch (e->kind) {
    case IRExpr::Kind::kVar:
      os << e->name;
      return;
    case IRExpr::Kind::kInt:
      os << e->i;
      return;
    case IRExpr::Kind::kBool:
      os << (e->b ? "true" : "false");
      return;
    case IRExpr::Kind::kConst:
      os << e->cval.to_string();
      return;
    case IRExpr::Kind::kOp: {
      if (infix(e->op) && e->args.size() == 2) {
        os << "(";
        print_expr_rec(os, e->args[0]);
        os << " " << ir_op_name(e->op) << " ";
        print_expr_rec(os, e->args[1]);
        os << ")";
        return;
      }
      if (e->op == IROp::kNot) {
        os << "!";
        print_expr_rec(os, e->args[0]);
        return;
      }
      os << ir_op_name(e->op) << "(";
      for (size_t i = 0; i < e->args.size(); ++i) {
        if (i) os << ", ";
        print_expr_rec(os, e->args[i]);
      }
      os << ")";
      return;
    }
    case IRExpr::Kind::kIndex:
      print_expr_rec(os, e->args[0]);
      os << "[" << e->index << "]";
      return;
    case IRExpr::Kind::kDone:
      os << "done " << e->name;
      return;
    case IRExpr::Kind::kSlice:
      os << "M[";
      print_expr_rec(os, e->args[0]);
      os << " : ";
      print_expr_rec(os, e->args[1]);
      os << "]";
      return;
  }
}

std::string print_expr(const IRExprPtr& e) {
  std::ostringstream os;
  print_expr_rec(os, e);
  return os.str();
}

void print_stmt(std::ostringstream& os, const IRStmtPtr& s, int indent) {
  std::string pad(static_cast<size_t>(indent) * 2, ' ');
  if (!s) return;
  switch (s->kind) {
    case IRStmt::Kind::kSeq:
      for (const auto& c : s->stmts) print_stmt(os, c, indent);
      return;
    case IRStmt::Kind::kSkip:
      os << pad << "skip;\n";
      return;
    case IRStmt::Kind::kAssign:
      os << pad << s->var << " := " << print_expr(s->expr) << ";\n";
      return;
    case IRStmt::Kind::kNext:
      os << pad << s->var << " := next " << s->iter << ";\n";
      return;
    case IRStmt::Kind::kInit: {
      os << pad << "init " << s->iter << "(";
      for (size_t i = 0; i < s->args.size(); ++i) {
        if (i) os << ", ";
        os << print_expr(s->args[i]);
      }
      os << ");\n";
      return;
    }
    case IRStmt::Kind::kYield:
      os << pad << "yield " << print_expr(s->expr) << ";\n";
      return;
    case IRStmt::Kind::kLoop:
      os << pad << "loop (" << print_expr(s->cond) << ") {\n";
      print_stmt(os, s->body, indent + 1);
      os << pad << "}\n";
      return;
    case IRStmt::Kind::kIf: {
      os << pad << "if (" << print_expr(s->cond) << ") {\n";
      print_stmt(os, s->body, indent + 1);
      bool empty_else = !s->els || s->els->kind == IRStmt::Kind::kSkip;
      if (!empty_else) {
        os << pad << "} else {\n";
        print_stmt(os, s->els, indent + 1);
      }
      os << pad << "}\n";
      return;
    }
  }
}

}  // namespace

std::string ir_to_string(const IRProgram& p) {
  std::ostringstream os;
  os << "entry " << p.entry << ";\n";
  for (const auto& it : p.iters) {
    os << "iter " << it.name << "(";
    for (size_t i = 0; i < it.params.size(); ++i) {
      if (i) os << ", ";
      os << it.params[i];
    }
    os << ") {\n";
    print_stmt(os, it.body, 1);
    os << "}\n";
  }
  return os.str();
}

// --- Binary form -------------------------------------------------------------

namespace {

void put_u8v(std::vector<uint8_t>& out, uint8_t v) { out.push_back(v); }

void put_u32v(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_i64v(std::vector<uint8_t>& out, int64_t v) {
  uint64_t u = static_cast<uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(u >> (8 * i)));
}

void put_str(std::vector<uint8_t>& out, const std::string& s) {
  put_u32v(out, static_cast<uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

void put_type(std::vector<uint8_t>& out, const IRType& t) {
  put_u8v(out, static_cast<uint8_t>(t.kind));
  put_u32v(out, static_cast<uint32_t>(t.elems.size()));
  for (const auto& e : t.elems) put_type(out, e);
}

void put_value(std::vector<uint8_t>& out, const Value& v) {
  put_u8v(out, static_cast<uint8_t>(v.kind()));
  switch (v.kind()) {
    case ValueKind::kNull:
      break;
    case ValueKind::kInt:
      put_i64v(out, v.as_int());
      break;
    case ValueKind::kBool:
      put_u8v(out, v.as_bool() ? 1 : 0);
      break;
    case ValueKind::kString:
      put_str(out, v.as_string());
      break;
    case ValueKind::kFixed:
      put_i64v(out, v.numerator());
      put_u8v(out, static_cast<uint8_t>(v.scale()));
      break;
    case ValueKind::kDate:
      put_i64v(out, v.days());
      break;
  }
}

void put_vmval(std::vector<uint8_t>& out, const VmVal& v) {
  put_u8v(out, static_cast<uint8_t>(v.kind));
  switch (v.kind) {
    case VmVal::Kind::kUnit:
      break;
    case VmVal::Kind::kVal:
      put_value(out, v.v);
      break;
    case VmVal::Kind::kTuple:
      put_u32v(out, static_cast<uint32_t>(v.elems.size()));
      for (const auto& e : v.elems) put_vmval(out, e);
      break;
  }
}

void put_exprv(std::vector<uint8_t>& out, const IRExprPtr& e) {
  put_u8v(out, static_cast<uint8_t>(e->kind));
  switch (e->kind) {
    case IRExpr::Kind::kVar:
    case IRExpr::Kind::kDone:
      put_str(out, e->name);
      break;
    case IRExpr::Kind::kInt:
      put_i64v(out, e->i);
      break;
    case IRExpr::Kind::kBool:
      put_u8v(out, e->b ? 1 : 0);
      break;
    case IRExpr::Kind::kConst:
      put_vmval(out, e->cval);
      put_type(out, e->ctype);
      break;
    case IRExpr::Kind::kOp:
      put_u8v(out, static_cast<uint8_t>(e->op));
      put_u32v(out, static_cast<uint32_t>(e->args.size()));
      for (const auto& a : e->args) put_exprv(out, a);
      break;
    case IRExpr::Kind::kIndex:
      put_u32v(out, static_cast<uint32_t>(e->index));
      put_exprv(out, e->args[0]);
      break;
    case IRExpr::Kind::kSlice:
      put_exprv(out, e->args[0]);
      put_exprv(out, e->args[1]);
      break;
  }
}

void put_stmtv(std::vector<uint8_t>& out, const IRStmtPtr& s) {
  if (!s) {
    put_u8v(out, static_cast<uint8_t>(IRStmt::Kind::kSkip));
    return;
  }
  put_u8v(out, static_cast<uint8_t>(s->kind));
  switch (s->kind) {
    case IRStmt::Kind::kLoop:
      put_exprv(out, s->cond);
      put_stmtv(out, s->body);
      break;
    case IRStmt::Kind::kIf:
      put_exprv(out, s->cond);
      put_stmtv(out, s->body);
      put_stmtv(out, s->els);
      break;
    case IRStmt::Kind::kSeq:
      put_u32v(out, static_cast<uint32_t>(s->stmts.size()));
      for (const auto& c : s->stmts) put_stmtv(out, c);
      break;
    case IRStmt::Kind::kAssign:
      put_str(out, s->var);
      put_exprv(out, s->expr);
      break;
    case IRStmt::Kind::kNext:
      put_str(out, s->var);
      put_str(out, s->iter);
      break;
    case IRStmt::Kind::kInit:
      put_str(out, s->iter);
      put_u32v(out, static_cast<uint32_t>(s->args.size()));
      for (const auto& a : s->args) put_exprv(out, a);
      break;
    case IRStmt::Kind::kYield:
      put_exprv(out, s->expr);
      break;
    case IRStmt::Kind::kSkip:
      break;
  }
}

struct IRReader {
  const std::vector<uint8_t>& bytes;
  size_t pos = 0;

  void need(size_t n) {
    if (pos + n > bytes.size()) throw Error("truncated program encoding");
  }
  uint8_t u8() {
    need(1);
    return bytes[pos++];
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t{bytes[pos++]} << (8 * i);
    return v;
  }
  int64_t i64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t{bytes[pos++]} << (8 * i);
    return static_cast<int64_t>(v);
  }
  std::string str() {
    uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes.data()) + pos, n);
    pos += n;
    return s;
  }
};

IRType get_type(IRReader& r) {
  auto kind = static_cast<IRType::Kind>(r.u8());
  uint32_t n = r.u32();
  IRType t;
  t.kind = kind;
  for (uint32_t i = 0; i < n; ++i) t.elems.push_back(get_type(r));
  return t;
}

Value get_value(IRReader& r) {
  auto kind = static_cast<ValueKind>(r.u8());
  switch (kind) {
    case ValueKind::kNull: return Value::null();
    case ValueKind::kInt: return Value::integer(r.i64());
    case ValueKind::kBool: return Value::boolean(r.u8() != 0);
    case ValueKind::kString: return Value::string(r.str());
    case ValueKind::kFixed: {
      int64_t num = r.i64();
      return Value::fixed(num, r.u8());
    }
    case ValueKind::kDate: return Value::date(r.i64());
  }
  throw Error("bad value kind in program encoding");
}

VmVal get_vmval(IRReader& r) {
  auto kind = static_cast<VmVal::Kind>(r.u8());
  switch (kind) {
    case VmVal::Kind::kUnit:
      return VmVal::unit();
    case VmVal::Kind::kVal:
      return VmVal::of(get_value(r));
    case VmVal::Kind::kTuple: {
      uint32_t n = r.u32();
      std::vector<VmVal> elems;
      elems.reserve(n);
      for (uint32_t i = 0; i < n; ++i) elems.push_back(get_vmval(r));
      return VmVal::tuple(std::move(elems));
    }
  }
  throw Error("bad value tag in program encoding");
}

IRExprPtr get_expr(IRReader& r) {
  auto kind = static_cast<IRExpr::Kind>(r.u8());
  switch (kind) {
    case IRExpr::Kind::kVar:
      return ir_var(r.str());
    case IRExpr::Kind::kDone:
      return ir_done(r.str());
    case IRExpr::Kind::kInt:
      return ir_int(r.i64());
    case IRExpr::Kind::kBool:
      return ir_bool(r.u8() != 0);
    case IRExpr::Kind::kConst: {
      VmVal v = get_vmval(r);
      IRType t = get_type(r);
      return ir_const(std::move(v), std::move(t));
    }
    case IRExpr::Kind::kOp: {
      auto op = static_cast<IROp>(r.u8());
      uint32_t n = r.u32();
      std::vector<IRExprPtr> args;
      args.reserve(n);
      for (uint32_t i = 0; i < n; ++i) args.push_back(get_expr(r));
      return ir_op(op, std::move(args));
    }
    case IRExpr::Kind::kIndex: {
      int idx = static_cast<int>(r.u32());
      return ir_index(get_expr(r), idx);
    }
    case IRExpr::Kind::kSlice: {
      IRExprPtr p = get_expr(r);
      IRExprPtr l = get_expr(r);
      return ir_slice(std::move(p), std::move(l));
    }
  }
  throw Error("bad expression tag in program encoding");
}

IRStmtPtr get_stmt(IRReader& r) {
  auto kind = static_cast<IRStmt::Kind>(r.u8());
  switch (kind) {
    case IRStmt::Kind::kLoop: {
      IRExprPtr c = get_expr(r);
      return ir_loop(std::move(c), get_stmt(r));
    }
    case IRStmt::Kind::kIf: {
      IRExprPtr c = get_expr(r);
      IRStmtPtr t = get_stmt(r);
      IRStmtPtr e = get_stmt(r);
      return ir_if(std::move(c), std::move(t), std::move(e));
    }
    case IRStmt::Kind::kSeq: {
      uint32_t n = r.u32();
      std::vector<IRStmtPtr> stmts;
      stmts.reserve(n);
      for (uint32_t i = 0; i < n; ++i) stmts.push_back(get_stmt(r));
      return ir_seq(std::move(stmts));
    }
    case IRStmt::Kind::kAssign: {
      std::string var = r.str();
      return ir_assign(std::move(var), get_expr(r));
    }
    case IRStmt::Kind::kNext: {
      std::string var = r.str();
      return ir_next(std::move(var), r.str());
    }
    case IRStmt::Kind::kInit: {
      std::string iter = r.str();
      uint32_t n = r.u32();
      std::vector<IRExprPtr> args;
      args.reserve(n);
      for (uint32_t i = 0; i < n; ++i) args.push_back(get_expr(r));
      return ir_init(std::move(iter), std::move(args));
    }
    case IRStmt::Kind::kYield:
      return ir_yield(get_expr(r));
    case IRStmt::Kind::kSkip:
      return ir_skip();
  }
  throw Error("bad statement tag in program encoding");
}

}  // namespace

std::vector<uint8_t> encode_ir(const IRProgram& p) {
  std::vector<uint8_t> out;
  put_u32v(out, static_cast<uint32_t>(p.iters.size()));
  for (const auto& it : p.iters) {
    put_str(out, it.name);
    put_u32v(out, static_cast<uint32_t>(it.params.size()));
    for (const auto& pr : it.params) put_str(out, pr);
    put_stmtv(out, it.body);
  }
  put_str(out, p.entry);
  put_u32v(out, static_cast<uint32_t>(p.entry_params.size()));
  for (const auto& t : p.entry_params) put_type(out, t);
  return out;
}

IRProgram decode_ir(const std::vector<uint8_t>& bytes) {
  IRReader r{bytes};
  IRProgram p;
  uint32_t n = r.u32();
  for (uint32_t i = 0; i < n; ++i) {
    IRIterator it;
    it.name = r.str();
    uint32_t np = r.u32();
    for (uint32_t j = 0; j < np; ++j) it.params.push_back(r.str());
    it.body = get_stmt(r);
    p.iters.push_back(std::move(it));
  }
  p.entry = r.str();
  uint32_t ne = r.u32();
  for (uint32_t i = 0; i < ne; ++i) p.entry_params.push_back(get_type(r));
  if (r.pos != bytes.size()) {
    throw Error("trailing bytes after program encoding");
  }
  return p;
}

}  // namespace strata

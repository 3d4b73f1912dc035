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

#ifndef STRATA_IR_H_
#define STRATA_IR_H_

// The run-time intermediate language: a small program of named, cooperating
// iterators that read the serialized layout buffer and stream result rows.
//
// An iterator is declared with parameters and a body statement.  `init
// f(args)` (re)starts iterator f with fresh locals; `x := next f` resumes f
// until its next `yield`, or sets f's done flag on exhaustion.  The buffer M
// is a single immutable byte region shared by the whole program; `M[p : l]`
// reads l bytes at offset p (l must stay within 1..8 — longer reads use the
// loadbytes intrinsic) and traps when the slice leaves the buffer.
//
// Runtime values carry the evaluator's scalar `Value` (so arithmetic,
// comparisons, null propagation, and Kleene and/or are shared with the
// reference interpreter by construction), plus unit and flat tuples.  The
// static type system is coarser: int-like scalars (int, fixed, date) all
// check as `int`.
//
// `typecheck_ir` names the violated rule in every diagnostic (ET-* for
// expressions, ST-* for statements); types of locals and parameters are
// inferred by a small fixpoint, since the language has no annotations.
// `run_ir` is a stack VM over flattened instruction lists with an explicit
// step budget; out-of-bounds reads trap citing E-Read.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "strata/value.hpp"

namespace strata {

// --- Runtime values ----------------------------------------------------------

struct VmVal {
  enum class Kind : uint8_t { kUnit, kVal, kTuple };

  Kind kind = Kind::kUnit;
  Value v;                    // kVal
  std::vector<VmVal> elems;   // kTuple

  static VmVal unit() { return VmVal(); }
  static VmVal of(Value val) {
    VmVal out;
    out.kind = Kind::kVal;
    out.v = std::move(val);
    return out;
  }
  static VmVal tuple(std::vector<VmVal> elems) {
    VmVal out;
    out.kind = Kind::kTuple;
    out.elems = std::move(elems);
    return out;
  }

  bool is_null() const { return kind == Kind::kVal && v.is_null(); }

  friend bool operator==(const VmVal& a, const VmVal& b);
  friend bool operator!=(const VmVal& a, const VmVal& b) { return !(a == b); }

  std::string to_string() const;
};

// --- Hashing -----------------------------------------------------------------
//
// The hash shared by index construction and probe code.  Values are reduced
// to a canonical byte string (numerics normalized so that equal values get
// equal encodings, e.g. fixed 5.0 encodes like int 5), folded with FNV-1a
// (offset 14695981039346656037, prime 1099511628211), mixed with the seed
// via the golden-ratio constant 0x9e3779b97f4a7c15, and finished with the
// splitmix64 avalanche (0xbf58476d1ce4e5b9 / 0x94d049bb133111eb, shifts
// 30/27/31).  Deterministic across platforms; documented here because the
// serialized bytes depend on it.

uint64_t hash_bytes(uint64_t seed, const std::string& bytes);
void encode_val_for_hash(std::string& out, const VmVal& v);
uint64_t hash_vals(uint64_t seed, const std::vector<VmVal>& vals);

// --- Types -------------------------------------------------------------------

struct IRType {
  enum class Kind : uint8_t { kUnit, kInt, kBool, kBytes, kTuple, kIter };

  Kind kind = Kind::kUnit;
  std::vector<IRType> elems;  // kTuple members; kIter yield type (one entry)

  static IRType unit() { return IRType{Kind::kUnit, {}}; }
  static IRType integer() { return IRType{Kind::kInt, {}}; }
  static IRType boolean() { return IRType{Kind::kBool, {}}; }
  static IRType bytes() { return IRType{Kind::kBytes, {}}; }
  static IRType tuple(std::vector<IRType> elems) {
    return IRType{Kind::kTuple, std::move(elems)};
  }
  static IRType iter(IRType yield) { return IRType{Kind::kIter, {std::move(yield)}}; }

  friend bool operator==(const IRType& a, const IRType& b);
  friend bool operator!=(const IRType& a, const IRType& b) { return !(a == b); }

  std::string to_string() const;
};

// --- Expressions -------------------------------------------------------------

enum class IROp : uint8_t {
  kAdd, kSub, kMul, kDiv, kMod,        // (int, int) -> int
  kEq, kLt, kLe, kGt, kGe,             // (t, t) -> bool, t scalar-like
  kAnd, kOr, kNot,                     // Kleene logic on bool
  kToInt,                              // bytes -> int, little-endian sign-extend
  kToBool,                             // bytes -> bool (one byte, 0 or 1)
  kToFixed,                            // (int numerator, int scale) -> int-like
  kToDate,                             // int day count -> int-like
  kLoadBytes,                          // (int pos, int len) -> bytes, any len
  kHash,                               // (int seed, scalars...) -> int
  kMakeTuple,                          // (t1, ..., tk) -> tuple
  kCond,                               // (bool, t, t) -> t; lazy, null picks else
  kIsNull,                             // scalar -> bool
};

const char* ir_op_name(IROp op);

struct IRExpr;
using IRExprPtr = std::shared_ptr<const IRExpr>;

struct IRExpr {
  enum class Kind : uint8_t {
    kVar,    // name
    kInt,    // i
    kBool,   // b
    kConst,  // cval with declared ctype (null constants need the annotation)
    kOp,     // op(args)
    kIndex,  // args[0] tuple member `index`
    kDone,   // done flag of iterator `name`
    kSlice,  // M[args[0] : args[1]]
  };

  Kind kind = Kind::kInt;
  std::string name;
  int64_t i = 0;
  bool b = false;
  VmVal cval;
  IRType ctype;
  IROp op = IROp::kAdd;
  std::vector<IRExprPtr> args;
  int index = 0;
};

IRExprPtr ir_var(std::string name);
IRExprPtr ir_int(int64_t v);
IRExprPtr ir_bool(bool v);
IRExprPtr ir_const(VmVal v, IRType t);
IRExprPtr ir_op(IROp op, std::vector<IRExprPtr> args);
IRExprPtr ir_index(IRExprPtr tuple, int index);
IRExprPtr ir_done(std::string iter);
IRExprPtr ir_slice(IRExprPtr pos, IRExprPtr len);

// --- Statements --------------------------------------------------------------

struct IRStmt;
using IRStmtPtr = std::shared_ptr<const IRStmt>;

struct IRStmt {
  enum class Kind : uint8_t {
    kLoop,    // loop (cond) { body }
    kIf,      // if (cond) { then } else { els }
    kSeq,     // stmts in order
    kAssign,  // var := expr
    kNext,    // var := next iter
    kInit,    // init iter(args)
    kYield,   // yield expr
    kSkip,
  };

  Kind kind = Kind::kSkip;
  IRExprPtr cond;
  std::vector<IRStmtPtr> stmts;  // kSeq; kLoop/kIf use body/els below
  IRStmtPtr body;                // kLoop body, kIf then-branch
  IRStmtPtr els;                 // kIf else-branch
  std::string var;
  std::string iter;
  IRExprPtr expr;
  std::vector<IRExprPtr> args;   // kInit
};

IRStmtPtr ir_loop(IRExprPtr cond, IRStmtPtr body);
IRStmtPtr ir_if(IRExprPtr cond, IRStmtPtr then_s, IRStmtPtr else_s);
IRStmtPtr ir_seq(std::vector<IRStmtPtr> stmts);
IRStmtPtr ir_assign(std::string var, IRExprPtr e);
IRStmtPtr ir_next(std::string var, std::string iter);
IRStmtPtr ir_init(std::string iter, std::vector<IRExprPtr> args);
IRStmtPtr ir_yield(IRExprPtr e);
IRStmtPtr ir_skip();

// --- Programs ----------------------------------------------------------------

struct IRIterator {
  std::string name;
  std::vector<std::string> params;
  IRStmtPtr body;
};

struct IRProgram {
  std::vector<IRIterator> iters;
  std::string entry;
  // Declared types for the entry iterator's parameters.  Every other
  // iterator's parameter types are inferred from its init sites, but the
  // entry has none, so its types must be stated.
  std::vector<IRType> entry_params;

  const IRIterator* find(const std::string& name) const;
};

// --- Typechecking ------------------------------------------------------------

struct IRDiag {
  std::string rule;     // the violated rule, e.g. "ST-Seq2"
  std::string where;    // iterator and statement path, e.g. "iter l0, stmt /1"
  std::string message;

  std::string to_string() const { return rule + " (" + where + "): " + message; }
};

// Empty result means the program is well typed.  Local and parameter types
// are inferred; every diagnostic names the violated rule.
std::vector<IRDiag> typecheck_ir(const IRProgram& p);

// Throws Error listing the diagnostics unless typecheck_ir is clean.
void require_well_typed(const IRProgram& p);

// --- Execution ---------------------------------------------------------------

// A trap is a run-time failure with the responsible rule and the program
// position in the message (out-of-bounds read, exhausted step budget,
// evaluation error, ...).
class IRTrap : public Error {
 public:
  explicit IRTrap(const std::string& what) : Error(what) {}
};

struct RunLimits {
  int64_t max_steps = 200'000'000;
};

// Runs the entry iterator to exhaustion and returns the yielded values in
// order.  `args` bind positionally to the entry iterator's parameters.
std::vector<VmVal> run_ir(const IRProgram& p, const std::vector<uint8_t>& buffer,
                          const std::vector<VmVal>& args,
                          const RunLimits& limits = {});

// --- Forms -------------------------------------------------------------------

// Human-readable listing of the whole program (for `explain`).
std::string ir_to_string(const IRProgram& p);

// Compact binary form for the artifact.  decode(encode(p)) is structurally
// identical.
std::vector<uint8_t> encode_ir(const IRProgram& p);
IRProgram decode_ir(const std::vector<uint8_t>& bytes);

}  // namespace strata

#endif  // STRATA_IR_H_

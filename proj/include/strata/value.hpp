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

#ifndef STRATA_VALUE_H_
#define STRATA_VALUE_H_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace strata {

// Raised for malformed queries and for evaluation failures (type mismatches,
// division by zero, context collisions, unknown relations, ...).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A (possibly scope-qualified) identifier.  Binders such as
// `depjoin(q as s, ...)` introduce a scope `s`; inside the bound subterm the
// fields of `q` are addressed as `s.field`.  Query parameters are ordinary
// identifiers whose base begins with '$'.
struct Ident {
  std::optional<std::string> scope;
  std::string base;

  Ident() = default;
  explicit Ident(std::string b) : base(std::move(b)) {}
  Ident(std::string s, std::string b) : scope(std::move(s)), base(std::move(b)) {}

  bool is_param() const { return !base.empty() && base[0] == '$'; }
  bool qualified() const { return scope.has_value(); }

  // "s.f" or "f".
  std::string to_string() const {
    return scope ? *scope + "." + base : base;
  }

  friend bool operator==(const Ident& a, const Ident& b) {
    return a.scope == b.scope && a.base == b.base;
  }
  friend bool operator!=(const Ident& a, const Ident& b) { return !(a == b); }
  friend bool operator<(const Ident& a, const Ident& b) {
    if (a.scope != b.scope) {
      if (!a.scope) return true;
      if (!b.scope) return false;
      return *a.scope < *b.scope;
    }
    return a.base < b.base;
  }
};

enum class ValueKind : uint8_t { kNull, kInt, kBool, kString, kFixed, kDate };

const char* value_kind_name(ValueKind k);

// A scalar runtime value.  Fixed-point decimals carry an integer numerator and
// a scale in [0, 9]: fixed(1234, 2) denotes 12.34.  Dates are day counts since
// 1970-01-01.  Null is a first-class value with SQL-like behavior: arithmetic
// and comparisons involving null produce null, and/or follow Kleene logic, and
// filters keep a row only when the predicate is literally true.
class Value {
 public:
  Value() : kind_(ValueKind::kNull) {}

  static Value null() { return Value(); }
  static Value integer(int64_t v) { return Value(ValueKind::kInt, v); }
  static Value boolean(bool v) { return Value(ValueKind::kBool, v ? 1 : 0); }
  static Value string(std::string s) {
    Value v(ValueKind::kString, 0);
    v.str_ = std::move(s);
    return v;
  }
  static Value fixed(int64_t numerator, int scale);
  static Value date(int64_t days) { return Value(ValueKind::kDate, days); }
  // Parses "YYYY-MM-DD"; throws Error on malformed input.
  static Value date_from_iso(const std::string& iso);

  ValueKind kind() const { return kind_; }
  bool is_null() const { return kind_ == ValueKind::kNull; }
  bool is_numeric() const {
    return kind_ == ValueKind::kInt || kind_ == ValueKind::kFixed;
  }

  int64_t as_int() const { return expect(ValueKind::kInt), num_; }
  bool as_bool() const { return expect(ValueKind::kBool), num_ != 0; }
  const std::string& as_string() const {
    return expect(ValueKind::kString), str_;
  }
  int64_t numerator() const { return expect(ValueKind::kFixed), num_; }
  int scale() const { return expect(ValueKind::kFixed), scale_; }
  int64_t days() const { return expect(ValueKind::kDate), num_; }

  // The raw payload without a kind check; used by serialization, where the
  // kind is already pinned by the layout type.
  int64_t raw() const { return num_; }

  // ISO "YYYY-MM-DD" for dates.
  std::string date_to_iso() const;

  // A parseable literal: 42, -3, 12.34, true, null, "abc", date("2020-01-01").
  std::string to_text() const;

  // Numeric equality: ints and fixeds compare by magnitude regardless of
  // scale; null equals null (containers and dedup need a reflexive equality,
  // the SQL-style three-valued comparison lives in the evaluator).
  friend bool operator==(const Value& a, const Value& b) {
    return compare_total(a, b) == 0;
  }
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

  // Total order used for sorting and multiset comparison: null sorts first,
  // then bool < numeric < string < date; numerics merge ints and fixeds.
  // Returns <0, 0, >0.
  static int compare_total(const Value& a, const Value& b);

 private:
  Value(ValueKind k, int64_t n) : kind_(k), num_(n) {}
  void expect(ValueKind k) const {
    if (kind_ != k) {
      throw Error(std::string("value is ") + value_kind_name(kind_) +
                  ", expected " + value_kind_name(k));
    }
  }

  ValueKind kind_;
  int64_t num_ = 0;  // int value, bool flag, fixed numerator, or day count
  int32_t scale_ = 0;
  std::string str_;
};

// An ordered field list.  Evaluation contexts (parameter and scope bindings)
// and relation rows share this representation.
class Tuple {
 public:
  Tuple() = default;

  const std::vector<std::pair<Ident, Value>>& fields() const { return fields_; }
  bool empty() const { return fields_.empty(); }
  size_t size() const { return fields_.size(); }

  const Value* find(const Ident& id) const {
    for (const auto& [name, v] : fields_) {
      if (name == id) return &v;
    }
    return nullptr;
  }

  // Appends a binding; duplicate names are a context collision (hard error).
  void bind(Ident id, Value v);

  // Replaces the value bound to `id`, or appends a new binding.
  void put(const Ident& id, Value v);

  // Union of two contexts; defined only when the key sets are disjoint.
  static Tuple disjoint_union(const Tuple& a, const Tuple& b);

  // The same fields with every name qualified by `scope`.
  Tuple scoped(const std::string& scope) const;

  friend bool operator==(const Tuple& a, const Tuple& b);
  // Lexicographic total order over (name, value) pairs.
  static int compare_total(const Tuple& a, const Tuple& b);

  std::string to_string() const;

 private:
  std::vector<std::pair<Ident, Value>> fields_;
};

using Schema = std::vector<Ident>;

std::string schema_to_string(const Schema& s);

// An ordered sequence of rows over a fixed schema.  Order is part of the
// semantics: every operator is specified as a transformation of sequences,
// and two evaluation strategies agree only if they produce equal sequences.
struct Relation {
  Schema schema;
  std::vector<Tuple> rows;

  std::string to_string() const;

  friend bool operator==(const Relation& a, const Relation& b) {
    return a.schema == b.schema && a.rows == b.rows;
  }
};

// Sorts rows into the canonical total order (for multiset comparison).
Relation sorted_copy(const Relation& r);

// Scalar binary operators shared by the surface language and the evaluator.
enum class BinOp : uint8_t {
  kAdd, kSub, kMul, kDiv, kMod,
  kEq, kLt, kLe, kGt, kGe,
  kAnd, kOr
};

const char* binop_symbol(BinOp op);
bool binop_is_comparison(BinOp op);

// Applies `op` with the semantics documented on Value: numeric promotion
// between int and fixed, strict errors on kind mismatches, null propagation,
// Kleene and/or.  Throws Error on type errors, division by zero, and
// fixed-point overflow.
Value eval_binop(BinOp op, const Value& a, const Value& b);

// Logical negation with null propagation.
Value eval_not(const Value& v);

}  // namespace strata

#endif  // STRATA_VALUE_H_

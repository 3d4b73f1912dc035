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

#include "strata/value.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

namespace strata {

namespace {

constexpr int kMaxScale = 9;

int64_t pow10_int(int n) {
  int64_t p = 1;
  for (int i = 0; i < n; ++i) p *= 10;
  return p;
}

int64_t checked_narrow(__int128 v, const char* what) {
  if (v > INT64_MAX || v < INT64_MIN) {
    throw Error(std::string(what) + " overflows 64 bits");
  }
  return static_cast<int64_t>(v);
}

// Widens a numeric value to a (numerator, scale) pair.
std::pair<__int128, int> numeric_parts(const Value& v) {
  if (v.kind() == ValueKind::kInt) return {v.as_int(), 0};
  return {v.numerator(), v.scale()};
}

int compare_numeric(const Value& a, const Value& b) {
  auto [na, sa] = numeric_parts(a);
  auto [nb, sb] = numeric_parts(b);
  int s = std::max(sa, sb);
  __int128 xa = na, xb = nb;
  for (int i = sa; i < s; ++i) xa *= 10;
  for (int i = sb; i < s; ++i) xb *= 10;
  if (xa < xb) return -1;
  if (xa > xb) return 1;
  return 0;
}

int kind_rank(ValueKind k) {
  switch (k) {
    case ValueKind::kNull: return 0;
    case ValueKind::kBool: return 1;
    case ValueKind::kInt:
    case ValueKind::kFixed: return 2;
    case ValueKind::kString: return 3;
    case ValueKind::kDate: return 4;
  }
  return 5;
}

}  // namespace

const char* value_kind_name(ValueKind k) {
  switch (k) {
    case ValueKind::kNull: return "null";
    case ValueKind::kInt: return "int";
    case ValueKind::kBool: return "bool";
    case ValueKind::kString: return "string";
    case ValueKind::kFixed: return "fixed";
    case ValueKind::kDate: return "date";
  }
  return "?";
}

Value Value::fixed(int64_t numerator, int scale) {
  if (scale < 0 || scale > kMaxScale) {
    throw Error("fixed-point scale must be in [0, 9], got " +
                std::to_string(scale));
  }
  Value v(ValueKind::kFixed, numerator);
  v.scale_ = scale;
  return v;
}

Value Value::date_from_iso(const std::string& iso) {
  int y = 0, m = 0, d = 0;
  char tail = 0;
  if (std::sscanf(iso.c_str(), "%d-%d-%d%c", &y, &m, &d, &tail) != 3) {
    throw Error("malformed date literal '" + iso + "', want YYYY-MM-DD");
  }
  std::chrono::year_month_day ymd{std::chrono::year(y),
                                  std::chrono::month(unsigned(m)),
                                  std::chrono::day(unsigned(d))};
  if (!ymd.ok()) throw Error("invalid calendar date '" + iso + "'");
  auto days = std::chrono::sys_days(ymd).time_since_epoch().count();
  return Value::date(days);
}

std::string Value::date_to_iso() const {
  expect(ValueKind::kDate);
  std::chrono::year_month_day ymd{
      std::chrono::sys_days(std::chrono::days(num_))};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

std::string Value::to_text() const {
  switch (kind_) {
    case ValueKind::kNull: return "null";
    case ValueKind::kInt: return std::to_string(num_);
    case ValueKind::kBool: return num_ ? "true" : "false";
    case ValueKind::kString: {
      std::string out = "\"";
      for (char c : str_) {
        switch (c) {
          case '"': out += "\\\""; break;
          case '\\': out += "\\\\"; break;
          case '\n': out += "\\n"; break;
          case '\t': out += "\\t"; break;
          case '\r': out += "\\r"; break;
          default: out += c;
        }
      }
      return out + "\"";
    }
    case ValueKind::kFixed: {
      int64_t p = pow10_int(scale_);
      int64_t whole = num_ / p;
      int64_t frac = num_ % p;
      if (frac < 0) frac = -frac;
      std::string out;
      if (num_ < 0 && whole == 0) out += "-";
      out += std::to_string(whole);
      out += ".";
      std::string f = std::to_string(frac);
      out += std::string(size_t(scale_) - std::min(f.size(), size_t(scale_)),
                         '0');
      if (scale_ > 0) out += f;
      return out;
    }
    case ValueKind::kDate: return "date(\"" + date_to_iso() + "\")";
  }
  return "?";
}

int Value::compare_total(const Value& a, const Value& b) {
  int ra = kind_rank(a.kind_), rb = kind_rank(b.kind_);
  if (ra != rb) return ra < rb ? -1 : 1;
  switch (a.kind_) {
    case ValueKind::kNull: return 0;
    case ValueKind::kBool:
    case ValueKind::kDate: {
      if (a.num_ != b.num_) return a.num_ < b.num_ ? -1 : 1;
      return 0;
    }
    case ValueKind::kInt:
    case ValueKind::kFixed: return compare_numeric(a, b);
    case ValueKind::kString: {
      int c = a.str_.compare(b.str_);
      return c < 0 ? -1 : c > 0 ? 1 : 0;
    }
  }
  return 0;
}

void Tuple::bind(Ident id, Value v) {
  if (find(id) != nullptr) {
    throw Error("context collision: '" + id.to_string() + "' bound twice");
  }
  fields_.emplace_back(std::move(id), std::move(v));
}

void Tuple::put(const Ident& id, Value v) {
  for (auto& [name, value] : fields_) {
    if (name == id) {
      value = std::move(v);
      return;
    }
  }
  fields_.emplace_back(id, std::move(v));
}

Tuple Tuple::disjoint_union(const Tuple& a, const Tuple& b) {
  Tuple out = a;
  for (const auto& [name, v] : b.fields_) out.bind(name, v);
  return out;
}

Tuple Tuple::scoped(const std::string& scope) const {
  Tuple out;
  for (const auto& [name, v] : fields_) {
    out.bind(Ident(scope, name.base), v);
  }
  return out;
}

bool operator==(const Tuple& a, const Tuple& b) {
  return Tuple::compare_total(a, b) == 0;
}

int Tuple::compare_total(const Tuple& a, const Tuple& b) {
  size_t n = std::min(a.fields_.size(), b.fields_.size());
  for (size_t i = 0; i < n; ++i) {
    const auto& [na, va] = a.fields_[i];
    const auto& [nb, vb] = b.fields_[i];
    if (na != nb) return na < nb ? -1 : 1;
    int c = Value::compare_total(va, vb);
    if (c != 0) return c;
  }
  if (a.fields_.size() != b.fields_.size()) {
    return a.fields_.size() < b.fields_.size() ? -1 : 1;
  }
  return 0;
}

std::string Tuple::to_string() const {
  std::string out = "{";
  for (size_t i = 0; i < fields_.size(); ++i) {
    if (i) out += ", ";
    out += fields_[i].first.to_string() + ": " + fields_[i].second.to_text();
  }
  return out + "}";
}

std::string schema_to_string(const Schema& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += s[i].to_string();
  }
  return out + "]";
}

std::string Relation::to_string() const {
  std::ostringstream out;
  out << schema_to_string(schema) << "\n";
  for (const Tuple& t : rows) out << "  " << t.to_string() << "\n";
  return out.str();
}

Relation sorted_copy(const Relation& r) {
  Relation out = r;
  std::stable_sort(out.rows.begin(), out.rows.end(),
                   [](const Tuple& a, const Tuple& b) {
                     return Tuple::compare_total(a, b) < 0;
                   });
  return out;
}

const char* binop_symbol(BinOp op) {
  switch (op) {
    case BinOp::kAdd: return "+";
    case BinOp::kSub: return "-";
    case BinOp::kMul: return "*";
    case BinOp::kDiv: return "/";
    case BinOp::kMod: return "%";
    case BinOp::kEq: return "=";
    case BinOp::kLt: return "<";
    case BinOp::kLe: return "<=";
    case BinOp::kGt: return ">";
    case BinOp::kGe: return ">=";
    case BinOp::kAnd: return "&&";
    case BinOp::kOr: return "||";
  }
  return "?";
}

bool binop_is_comparison(BinOp op) {
  switch (op) {
    case BinOp::kEq:
    case BinOp::kLt:
    case BinOp::kLe:
    case BinOp::kGt:
    case BinOp::kGe: return true;
    default: return false;
  }
}

namespace {

Value compare_result(BinOp op, int c) {
  switch (op) {
    case BinOp::kEq: return Value::boolean(c == 0);
    case BinOp::kLt: return Value::boolean(c < 0);
    case BinOp::kLe: return Value::boolean(c <= 0);
    case BinOp::kGt: return Value::boolean(c > 0);
    case BinOp::kGe: return Value::boolean(c >= 0);
    default: throw Error("not a comparison");
  }
}

[[noreturn]] void binop_type_error(BinOp op, const Value& a, const Value& b) {
  throw Error(std::string("operator '") + binop_symbol(op) +
              "' not defined for " + value_kind_name(a.kind()) + " and " +
              value_kind_name(b.kind()));
}

Value numeric_binop(BinOp op, const Value& a, const Value& b) {
  if (binop_is_comparison(op)) return compare_result(op, compare_numeric(a, b));
  // Pure integer arithmetic stays integer.
  if (a.kind() == ValueKind::kInt && b.kind() == ValueKind::kInt) {
    int64_t x = a.as_int(), y = b.as_int(), r = 0;
    switch (op) {
      case BinOp::kAdd:
        if (__builtin_add_overflow(x, y, &r)) throw Error("integer overflow");
        return Value::integer(r);
      case BinOp::kSub:
        if (__builtin_sub_overflow(x, y, &r)) throw Error("integer overflow");
        return Value::integer(r);
      case BinOp::kMul:
        if (__builtin_mul_overflow(x, y, &r)) throw Error("integer overflow");
        return Value::integer(r);
      case BinOp::kDiv:
        if (y == 0) throw Error("division by zero");
        if (x == INT64_MIN && y == -1) throw Error("integer overflow");
        return Value::integer(x / y);
      case BinOp::kMod:
        if (y == 0) throw Error("division by zero");
        if (x == INT64_MIN && y == -1) throw Error("integer overflow");
        return Value::integer(x % y);
      default: binop_type_error(op, a, b);
    }
  }
  // Mixed or fixed arithmetic: promote ints to scale-0 fixeds.
  auto [na, sa] = numeric_parts(a);
  auto [nb, sb] = numeric_parts(b);
  switch (op) {
    case BinOp::kAdd:
    case BinOp::kSub: {
      int s = std::max(sa, sb);
      __int128 xa = na, xb = nb;
      for (int i = sa; i < s; ++i) xa *= 10;
      for (int i = sb; i < s; ++i) xb *= 10;
      __int128 r = op == BinOp::kAdd ? xa + xb : xa - xb;
      return Value::fixed(checked_narrow(r, "fixed-point result"), s);
    }
    case BinOp::kMul: {
      int s = sa + sb;
      if (s > kMaxScale) {
        throw Error("fixed-point scale overflow: " + std::to_string(sa) +
                    " + " + std::to_string(sb) + " > 9");
      }
      __int128 r = __int128(na) * nb;
      return Value::fixed(checked_narrow(r, "fixed-point result"), s);
    }
    case BinOp::kDiv: {
      // Both sides at a common scale s; the quotient keeps scale s.
      int s = std::max(sa, sb);
      __int128 xa = na, xb = nb;
      for (int i = sa; i < s; ++i) xa *= 10;
      for (int i = sb; i < s; ++i) xb *= 10;
      if (xb == 0) throw Error("division by zero");
      __int128 scaled = xa;
      for (int i = 0; i < s; ++i) scaled *= 10;
      return Value::fixed(checked_narrow(scaled / xb, "fixed-point result"), s);
    }
    default: binop_type_error(op, a, b);
  }
}

}  // namespace

Value eval_binop(BinOp op, const Value& a, const Value& b) {
  // Kleene logic: a definite false (and) / true (or) wins even against null.
  if (op == BinOp::kAnd || op == BinOp::kOr) {
    auto check = [&](const Value& v) {
      if (!v.is_null() && v.kind() != ValueKind::kBool) {
        binop_type_error(op, a, b);
      }
    };
    check(a);
    check(b);
    bool want = op == BinOp::kOr;  // absorbing element
    if ((!a.is_null() && a.as_bool() == want) ||
        (!b.is_null() && b.as_bool() == want)) {
      return Value::boolean(want);
    }
    if (a.is_null() || b.is_null()) return Value::null();
    return Value::boolean(op == BinOp::kAnd ? (a.as_bool() && b.as_bool())
                                            : (a.as_bool() || b.as_bool()));
  }
  if (a.is_null() || b.is_null()) return Value::null();
  if (a.is_numeric() && b.is_numeric()) return numeric_binop(op, a, b);
  switch (a.kind()) {
    case ValueKind::kString:
      if (b.kind() != ValueKind::kString || !binop_is_comparison(op)) break;
      return compare_result(op, a.as_string().compare(b.as_string()));
    case ValueKind::kBool:
      if (b.kind() != ValueKind::kBool || !binop_is_comparison(op)) break;
      return compare_result(op, int(a.as_bool()) - int(b.as_bool()));
    case ValueKind::kDate: {
      if (b.kind() == ValueKind::kDate) {
        if (binop_is_comparison(op)) {
          return compare_result(op, a.days() < b.days()   ? -1
                                    : a.days() > b.days() ? 1
                                                          : 0);
        }
        if (op == BinOp::kSub) {
          return Value::integer(a.days() - b.days());
        }
        break;
      }
      if (b.kind() == ValueKind::kInt &&
          (op == BinOp::kAdd || op == BinOp::kSub)) {
        int64_t d = op == BinOp::kAdd ? a.days() + b.as_int()
                                      : a.days() - b.as_int();
        return Value::date(d);
      }
      break;
    }
    case ValueKind::kInt:
      // int + date commutes.
      if (b.kind() == ValueKind::kDate && op == BinOp::kAdd) {
        return Value::date(b.days() + a.as_int());
      }
      break;
    default: break;
  }
  binop_type_error(op, a, b);
}

Value eval_not(const Value& v) {
  if (v.is_null()) return Value::null();
  if (v.kind() != ValueKind::kBool) {
    throw Error(std::string("operator 'not' not defined for ") +
                value_kind_name(v.kind()));
  }
  return Value::boolean(!v.as_bool());
}

}  // namespace strata

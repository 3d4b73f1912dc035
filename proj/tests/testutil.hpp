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

// Shared helpers for the strata test suites: a deterministic RNG, in-memory
// database builders, row comparisons, and independent reference computations
// (nested-loop joins, fold aggregates, linear range scans) that the tests use
// to cross-check the production code paths.  The oracles here are written
// directly against rows on purpose; they share no code with the evaluator,
// the serializer, or the generated readers they judge.

#ifndef STRATA_TESTS_TESTUTIL_H_
#define STRATA_TESTS_TESTUTIL_H_

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "strata/catalog.hpp"
#include "strata/interp.hpp"
#include "strata/ir.hpp"
#include "strata/layout_type.hpp"
#include "strata/lower.hpp"
#include "strata/parser.hpp"
#include "strata/serialize.hpp"
#include "strata/value.hpp"

namespace strata {
namespace testing {

// Deterministic 64-bit generator (splitmix64).  Hand-rolled so that fixtures
// are reproducible across standard libraries and platforms.
struct Rng {
  uint64_t state;

  explicit Rng(uint64_t seed) : state(seed) {}

  uint64_t next() {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n).
  int64_t below(int64_t n) { return int64_t(next() % uint64_t(n)); }

  // Uniform in [lo, hi], inclusive.
  int64_t range(int64_t lo, int64_t hi) { return lo + below(hi - lo + 1); }

  bool chance(double p) { return double(next() >> 11) * 0x1.0p-53 < p; }
};

// --- Database builders -------------------------------------------------------

// Adds an all-integer relation with the given rows to `db`.
inline void add_int_relation(Database& db, const std::string& name,
                             const std::vector<std::string>& cols,
                             const std::vector<std::vector<int64_t>>& rows) {
  RelationDecl decl;
  decl.name = name;
  Relation r;
  for (const auto& c : cols) {
    decl.columns.push_back({c, ValueKind::kInt, 0});
    r.schema.push_back(Ident(c));
  }
  db.catalog.relations.push_back(decl);
  for (const auto& vals : rows) {
    Tuple t;
    for (size_t i = 0; i < cols.size(); ++i) {
      t.bind(Ident(cols[i]), Value::integer(vals[i]));
    }
    r.rows.push_back(std::move(t));
  }
  db.relations[name] = std::move(r);
}

// A one-relation, all-integer database.
inline Database int_db(const std::string& name,
                       const std::vector<std::string>& cols,
                       const std::vector<std::vector<int64_t>>& rows) {
  Database db;
  add_int_relation(db, name, cols, rows);
  return db;
}

// Adds a relation with explicit column declarations and arbitrary values.
inline void add_relation(Database& db, const std::string& name,
                         const std::vector<ColumnDecl>& cols,
                         const std::vector<std::vector<Value>>& rows) {
  RelationDecl decl;
  decl.name = name;
  Relation r;
  for (const auto& c : cols) {
    decl.columns.push_back(c);
    r.schema.push_back(Ident(c.name));
  }
  db.catalog.relations.push_back(decl);
  for (const auto& vals : rows) {
    Tuple t;
    for (size_t i = 0; i < cols.size(); ++i) t.bind(Ident(cols[i].name), vals[i]);
    r.rows.push_back(std::move(t));
  }
  db.relations[name] = std::move(r);
}

inline Tuple int_params(
    const std::vector<std::pair<std::string, int64_t>>& binds) {
  Tuple t;
  for (const auto& [name, v] : binds) t.bind(Ident(name), Value::integer(v));
  return t;
}

// --- Comparisons -------------------------------------------------------------

inline bool same_rows(const Relation& a, const Relation& b) {
  if (a.schema != b.schema || a.rows.size() != b.rows.size()) return false;
  for (size_t i = 0; i < a.rows.size(); ++i) {
    if (Tuple::compare_total(a.rows[i], b.rows[i]) != 0) return false;
  }
  return true;
}

inline bool same_rows_any_order(const Relation& a, const Relation& b) {
  if (a.schema != b.schema || a.rows.size() != b.rows.size()) return false;
  std::vector<Tuple> x = a.rows, y = b.rows;
  auto lt = [](const Tuple& p, const Tuple& q) {
    return Tuple::compare_total(p, q) < 0;
  };
  std::sort(x.begin(), x.end(), lt);
  std::sort(y.begin(), y.end(), lt);
  for (size_t i = 0; i < x.size(); ++i) {
    if (Tuple::compare_total(x[i], y[i]) != 0) return false;
  }
  return true;
}

inline std::string dump_rows(const Relation& r, size_t max_rows = 12) {
  std::string out;
  for (size_t i = 0; i < r.rows.size() && i < max_rows; ++i) {
    out += "  " + r.rows[i].to_string() + "\n";
  }
  if (r.rows.size() > max_rows) out += "  ...\n";
  return out;
}

// --- End-to-end helper -------------------------------------------------------

// Serializes `q` against `db`, lowers it, and runs the generated reader over
// the stored bytes.  This is the full storage path under test; callers compare
// the result against eval_query or one of the oracles below.
inline Relation run_staged(const QueryPtr& q, const Database& db,
                           const Tuple& params = {},
                           const RunLimits& limits = {}) {
  TypedLayout typed = infer_type(q, db);
  SerializedLayout stored = serialize(q, db, typed);
  LoweredPlan plan = lower(q, db.catalog, typed);
  return run_plan(plan, stored.bytes, params, limits);
}

inline Relation run_staged_text(const std::string& text, const Database& db,
                                const Tuple& params = {}) {
  return run_staged(parse_query(text), db, params);
}

inline Relation eval_text(const std::string& text, const Database& db,
                          const Tuple& params = {}) {
  EvalContext ctx(db, params);
  return eval_query(parse_query(text), ctx);
}

// --- Independent oracles -----------------------------------------------------

// Nested-loop join: every pair, left-major order, rows merged left-then-right.
inline std::vector<Tuple> oracle_join(
    const std::vector<Tuple>& left, const std::vector<Tuple>& right,
    const std::function<bool(const Tuple&, const Tuple&)>& keep) {
  std::vector<Tuple> out;
  for (const Tuple& l : left) {
    for (const Tuple& r : right) {
      if (!keep(l, r)) continue;
      Tuple m = l;
      for (const auto& [k, v] : r.fields()) m.bind(k, v);
      out.push_back(std::move(m));
    }
  }
  return out;
}

// First-occurrence deduplication by whole-row comparison.
inline std::vector<Tuple> oracle_dedup(const std::vector<Tuple>& rows) {
  std::vector<Tuple> out;
  for (const Tuple& t : rows) {
    bool seen = false;
    for (const Tuple& u : out) {
      if (Tuple::compare_total(t, u) == 0) {
        seen = true;
        break;
      }
    }
    if (!seen) out.push_back(t);
  }
  return out;
}

// Fold aggregates over a column, written as plain loops.  Null handling: sum,
// min, max, and avg skip nulls; count counts every row.
inline Value oracle_sum(const std::vector<Value>& vs) {
  int64_t acc = 0;
  for (const Value& v : vs) {
    if (!v.is_null()) acc += v.as_int();
  }
  return Value::integer(acc);
}

inline Value oracle_count(const std::vector<Value>& vs) {
  return Value::integer(int64_t(vs.size()));
}

inline Value oracle_min(const std::vector<Value>& vs) {
  std::optional<int64_t> best;
  for (const Value& v : vs) {
    if (v.is_null()) continue;
    if (!best || v.as_int() < *best) best = v.as_int();
  }
  return best ? Value::integer(*best) : Value::null();
}

inline Value oracle_max(const std::vector<Value>& vs) {
  std::optional<int64_t> best;
  for (const Value& v : vs) {
    if (v.is_null()) continue;
    if (!best || v.as_int() > *best) best = v.as_int();
  }
  return best ? Value::integer(*best) : Value::null();
}

inline Value oracle_avg(const std::vector<Value>& vs) {
  int64_t acc = 0, n = 0;
  for (const Value& v : vs) {
    if (v.is_null()) continue;
    acc += v.as_int();
    ++n;
  }
  if (n == 0) return Value::null();
  return Value::integer(acc / n);  // integer division, truncating toward zero
}

// Linear scan for rows whose key columns all fall inside the per-column
// closed interval [lo[i], hi[i]].  This is box containment, not a
// lexicographic range.
inline std::vector<Tuple> oracle_box_scan(const std::vector<Tuple>& rows,
                                          const std::vector<Ident>& key_cols,
                                          const std::vector<int64_t>& lo,
                                          const std::vector<int64_t>& hi) {
  std::vector<Tuple> out;
  for (const Tuple& t : rows) {
    bool inside = true;
    for (size_t i = 0; i < key_cols.size(); ++i) {
      const Value* v = t.find(key_cols[i]);
      if (!v || v->is_null() || v->as_int() < lo[i] || v->as_int() > hi[i]) {
        inside = false;
        break;
      }
    }
    if (inside) out.push_back(t);
  }
  return out;
}

// Group rows by one integer column in first-occurrence order.
inline std::vector<std::pair<int64_t, std::vector<Tuple>>> oracle_group(
    const std::vector<Tuple>& rows, const Ident& key) {
  std::vector<std::pair<int64_t, std::vector<Tuple>>> out;
  for (const Tuple& t : rows) {
    int64_t k = t.find(key)->as_int();
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const auto& g) { return g.first == k; });
    if (it == out.end()) {
      out.push_back({k, {t}});
    } else {
      it->second.push_back(t);
    }
  }
  return out;
}

}  // namespace testing
}  // namespace strata

#endif  // STRATA_TESTS_TESTUTIL_H_

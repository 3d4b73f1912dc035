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

// Random serializable program generation for the storage round-trip suites.
//
// Each case is a small database (up to three integer relations of up to fifty
// rows), a query that interleaves stored-layout operators with run-time
// filters, projections, and dependent joins, and a handful of parameter
// bindings to run it under.  Programs are built bottom-up from a depth budget
// so that every case stays within depth six and passes the staging check by
// construction: compile-time zones only mention relations, constants, and
// their own binders, while parameters appear only in run-time positions and
// index lookup arguments.

#ifndef STRATA_TESTS_PROGEN_H_
#define STRATA_TESTS_PROGEN_H_

#include <string>
#include <utility>
#include <vector>

#include "testutil.hpp"

namespace strata {
namespace testing {

struct GenCase {
  Database db;
  std::string query;
  // Parameter bindings to evaluate the query under (a single empty tuple when
  // the query takes no parameters).
  std::vector<Tuple> bindings;
};

namespace progen_detail {

struct RelInfo {
  std::string name;
  std::vector<std::string> cols;
  std::vector<std::vector<int64_t>> rows;
};

// Query text plus the column names it produces.
using Piece = std::pair<std::string, std::vector<std::string>>;

struct Gen {
  Rng& rng;
  std::vector<RelInfo> rels;
  int fresh = 0;
  // Parameters introduced so far, each with a pool of plausible values for
  // the position it probes.
  std::vector<std::pair<std::string, std::vector<int64_t>>> params;

  explicit Gen(Rng& r) : rng(r) {}

  std::string fresh_name(const std::string& stem) {
    return stem + std::to_string(fresh++);
  }

  const RelInfo& pick_rel() { return rels[size_t(rng.below(rels.size()))]; }

  static std::vector<int64_t> column_pool(const RelInfo& r, size_t col) {
    std::vector<int64_t> pool;
    for (const auto& row : r.rows) pool.push_back(row[col]);
    if (pool.empty()) pool.push_back(0);
    return pool;
  }

  // A constant drawn near the values of one column, so that comparisons are
  // neither always true nor always false.
  int64_t near_const(const RelInfo& r, size_t col) {
    std::vector<int64_t> pool = column_pool(r, col);
    int64_t v = pool[size_t(rng.below(pool.size()))];
    return v + rng.range(-2, 2);
  }

  // Either reuses or mints a parameter whose bindings will be drawn from
  // `pool`; falls back to a constant once two parameters exist.
  std::string probe_term(std::vector<int64_t> pool) {
    if (params.size() < 2 && rng.chance(0.6)) {
      std::string name = "$p" + std::to_string(params.size());
      params.push_back({name, std::move(pool)});
      return name;
    }
    if (!params.empty() && rng.chance(0.4)) {
      size_t i = size_t(rng.below(params.size()));
      for (int64_t v : pool) params[i].second.push_back(v);
      return params[i].first;
    }
    return std::to_string(pool[size_t(rng.below(pool.size()))]);
  }

  // A compile-time predicate over `r`'s columns: constants only.
  std::string static_pred(const RelInfo& r) {
    size_t c = size_t(rng.below(r.cols.size()));
    const char* ops[] = {"<", "<=", ">", ">=", "="};
    return r.cols[c] + " " + ops[rng.below(5)] + " " +
           std::to_string(near_const(r, c));
  }

  // One stored row for binder `scope` over relation `r`.  Keeps a random
  // nonempty subset of columns unless `all` is set (concat arms and index
  // values keep everything so their shapes line up).
  Piece row_tuple(const std::string& scope, const RelInfo& r, bool all) {
    std::vector<std::string> parts, cols;
    for (size_t c = 0; c < r.cols.size(); ++c) {
      if (all || parts.empty() || rng.chance(0.8)) {
        parts.push_back("ascalar(" + scope + "." + r.cols[c] + " as " +
                        r.cols[c] + ")");
        cols.push_back(r.cols[c]);
      }
    }
    if (parts.size() == 1) return {parts[0], cols};
    std::string out = "atuple([";
    for (size_t i = 0; i < parts.size(); ++i) {
      if (i) out += ", ";
      out += parts[i];
    }
    return {out + "]; cross)", cols};
  }

  // The stored value side for an index keyed on r.cols[key]: the matching
  // rows of `r`, laid out as a list of full-width tuples.
  std::string index_value(const std::string& scope, const RelInfo& r,
                          size_t key) {
    std::string inner = fresh_name("v");
    return "alist(filter(" + scope + "." + r.cols[key] + " = " + r.cols[key] +
           ", " + r.name + ") as " + inner + ", " +
           row_tuple(inner, r, /*all=*/true).first + ")";
  }

  // A pure storage subtree within `budget` levels of query operators.
  //
  // Level costs (deepest path, counting every query node): a bare list is 2,
  // a filtered or nested list 4, a hash index 4, an ordered index 5, a concat
  // of two filtered lists 4.
  Piece storage(int budget) {
    if (budget <= 1 || rng.chance(0.1)) {
      std::string n = fresh_name("k");
      return {"ascalar(" + std::to_string(rng.range(-50, 150)) + " as " + n +
                  ")",
              {n}};
    }
    int kind = int(rng.below(10));
    if (kind >= 4 && kind < 6 && budget >= 4) {  // hash index
      const RelInfo& r = pick_rel();
      size_t key = size_t(rng.below(r.cols.size()));
      std::string s = fresh_name("h");
      std::string probe = probe_term(column_pool(r, key));
      return {"ahashidx(dedup(select({" + r.cols[key] + "}, " + r.name +
                  ")) as " + s + ", " + index_value(s, r, key) + ", " + probe +
                  ")",
              r.cols};
    }
    if (kind >= 6 && kind < 8 && budget >= 5) {  // ordered index
      const RelInfo& r = pick_rel();
      size_t key = size_t(rng.below(r.cols.size()));
      std::string s = fresh_name("o");
      std::string lo = probe_term(column_pool(r, key));
      std::string hi = probe_term(column_pool(r, key));
      return {"aorderedidx(orderby([" + r.cols[key] + "], dedup(select({" +
                  r.cols[key] + "}, " + r.name + "))) as " + s + ", " +
                  index_value(s, r, key) + ", " + lo + ", " + hi + ")",
              r.cols};
    }
    if (kind == 8 && budget >= 4) {  // concat of two partitions
      const RelInfo& r = pick_rel();
      size_t c = size_t(rng.below(r.cols.size()));
      int64_t cut = near_const(r, c);
      std::string s1 = fresh_name("s"), s2 = fresh_name("s");
      std::string arm1 = "alist(filter(" + r.cols[c] + " < " +
                         std::to_string(cut) + ", " + r.name + ") as " + s1 +
                         ", " + row_tuple(s1, r, true).first + ")";
      std::string arm2 = "alist(filter(not " + r.cols[c] + " < " +
                         std::to_string(cut) + ", " + r.name + ") as " + s2 +
                         ", " + row_tuple(s2, r, true).first + ")";
      return {"atuple([" + arm1 + ", " + arm2 + "]; concat)", r.cols};
    }
    if (kind == 9 && budget >= 2) {  // cross of fresh constants
      std::vector<std::string> parts, cols;
      int n = int(rng.range(2, 3));
      for (int i = 0; i < n; ++i) {
        std::string name = fresh_name("k");
        parts.push_back("ascalar(" + std::to_string(rng.range(-9, 9)) +
                        " as " + name + ")");
        cols.push_back(name);
      }
      std::string out = "atuple([";
      for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += ", ";
        out += parts[i];
      }
      return {out + "]; cross)", cols};
    }
    // Default: a list over one relation.
    const RelInfo& r = pick_rel();
    std::string s = fresh_name("s");
    std::string keys = r.name;
    if (budget >= 4 && rng.chance(0.4)) {
      keys = "filter(" + static_pred(r) + ", " + r.name + ")";
    }
    if (budget >= 4 && rng.chance(0.25)) {
      // Nested list: correlate a second relation with the outer binder.
      const RelInfo& r2 = pick_rel();
      size_t c1 = size_t(rng.below(r.cols.size()));
      size_t c2 = size_t(rng.below(r2.cols.size()));
      std::string t = fresh_name("s");
      auto [row, cols] = row_tuple(t, r2, false);
      return {"alist(" + keys + " as " + s + ", alist(filter(" + s + "." +
                  r.cols[c1] + " = " + r2.cols[c2] + ", " + r2.name + ") as " +
                  t + ", " + row + "))",
              cols};
    }
    auto [row, cols] = row_tuple(s, r, false);
    return {"alist(" + keys + " as " + s + ", " + row + ")", cols};
  }

  // A run-time scalar term over the visible columns.
  std::string runtime_term(const std::vector<std::string>& cols) {
    const std::string& c = cols[size_t(rng.below(cols.size()))];
    switch (rng.below(4)) {
      case 0:
        return c;
      case 1:
        return c + " + " + std::to_string(rng.range(-5, 5));
      case 2:
        return c + " * 2";
      default:
        return c + " - " + cols[size_t(rng.below(cols.size()))];
    }
  }

  // A run-time predicate over the visible columns; may consume a parameter.
  std::string runtime_pred(const std::vector<std::string>& cols) {
    size_t ci = size_t(rng.below(cols.size()));
    const char* ops[] = {"<", "<=", ">", ">=", "="};
    std::string rhs = rng.chance(0.5)
                          ? probe_term({rng.range(-20, 120)})
                          : std::to_string(rng.range(-20, 120));
    std::string p = cols[ci] + " " + ops[rng.below(5)] + " " + rhs;
    if (rng.chance(0.25)) {
      std::string q = cols[size_t(rng.below(cols.size()))] + " " +
                      ops[rng.below(5)] + " " +
                      std::to_string(rng.range(-20, 120));
      p = "(" + p + (rng.chance(0.5) ? " && " : " || ") + q + ")";
    }
    return p;
  }

  // The whole program: storage wrapped in zero or more run-time operators,
  // within `budget` total levels.
  Piece runtime(int budget) {
    if (budget >= 5 && rng.chance(0.15)) {
      // A dependent join: the left binder may only appear in run-time
      // positions on the right, so reference it from a projection there.
      auto [l, lcols] = storage(2);
      auto [r, rcols] = storage(budget - 2);
      std::string d = fresh_name("d");
      std::string z = fresh_name("z");
      std::string items = "{" + d + "." + lcols[0] + " + " +
                          rcols[size_t(rng.below(rcols.size()))] + " as " + z;
      std::vector<std::string> cols = {z};
      for (const std::string& c : rcols) {
        items += ", " + c;
        cols.push_back(c);
      }
      items += "}";
      return {"depjoin(" + l + " as " + d + ", select(" + items + ", " + r +
                  "))",
              cols};
    }
    int wraps = int(rng.below(3));
    auto [q, cols] = storage(budget - wraps);
    for (int i = 0; i < wraps; ++i) {
      switch (rng.below(3)) {
        case 0:
          q = "filter(" + runtime_pred(cols) + ", " + q + ")";
          break;
        case 1: {  // projection with a little arithmetic
          std::string items;
          std::vector<std::string> ncols;
          size_t keep = 1 + size_t(rng.below(cols.size()));
          for (size_t j = 0; j < keep; ++j) {
            std::string n = fresh_name("x");
            if (!items.empty()) items += ", ";
            items += runtime_term(cols) + " as " + n;
            ncols.push_back(n);
          }
          q = "select({" + items + "}, " + q + ")";
          cols = ncols;
          break;
        }
        default: {  // fold the rows down to aggregates
          std::string n1 = fresh_name("agg"), n2 = fresh_name("agg");
          const std::string& c = cols[size_t(rng.below(cols.size()))];
          const char* folds[] = {"sum", "min", "max", "avg"};
          std::string f = folds[rng.below(4)];
          q = "select({count() as " + n1 + ", " + f + "(" + c + ") as " + n2 +
              "}, " + q + ")";
          cols = {n1, n2};
          i = wraps;  // aggregates stay outermost
          break;
        }
      }
    }
    return {q, cols};
  }
};

}  // namespace progen_detail

// Generates one random case from `seed`.  Databases have up to three integer
// relations of at most fifty rows; queries stay within depth six; at most two
// parameters appear, and every case comes with concrete bindings to run.
inline GenCase gen_case(uint64_t seed) {
  Rng rng(seed);
  progen_detail::Gen g(rng);

  int nrels = int(rng.range(1, 3));
  for (int i = 0; i < nrels; ++i) {
    progen_detail::RelInfo r;
    r.name = "t" + std::to_string(i);
    int ncols = int(rng.range(2, 4));
    for (int c = 0; c < ncols; ++c) {
      r.cols.push_back(std::string(1, char('a' + c)) + std::to_string(i));
    }
    int nrows = int(rng.below(51));
    if (i == 0 && nrows == 0) nrows = 1;  // keep at least one non-empty table
    for (int j = 0; j < nrows; ++j) {
      std::vector<int64_t> row;
      for (int c = 0; c < ncols; ++c) {
        row.push_back(rng.chance(0.1) ? rng.range(-100000, 100000)
                                      : rng.range(-20, 99));
      }
      r.rows.push_back(std::move(row));
    }
    g.rels.push_back(std::move(r));
  }

  auto [query, cols] = g.runtime(6);
  (void)cols;

  GenCase out;
  for (const auto& r : g.rels) add_int_relation(out.db, r.name, r.cols, r.rows);
  out.query = query;

  int nbinds = g.params.empty() ? 1 : int(rng.range(2, 4));
  for (int i = 0; i < nbinds; ++i) {
    Tuple t;
    for (const auto& [name, pool] : g.params) {
      if (rng.chance(0.08)) {
        t.bind(Ident(name), Value::null());
      } else if (rng.chance(0.2)) {
        t.bind(Ident(name), Value::integer(rng.range(-100, 200)));
      } else {
        t.bind(Ident(name),
               Value::integer(pool[size_t(rng.below(pool.size()))]));
      }
    }
    out.bindings.push_back(std::move(t));
  }
  return out;
}

}  // namespace testing
}  // namespace strata

#endif  // STRATA_TESTS_PROGEN_H_

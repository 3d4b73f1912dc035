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

// The reference evaluator, cross-checked against the independent oracles in
// testutil.hpp and against hand-computed results.

#include "gtest/gtest.h"
#include "strata/interp.hpp"
#include "strata/parser.hpp"
#include "testutil.hpp"

namespace strata {
namespace {

using testing::Rng;
using testing::eval_text;
using testing::int_db;

TEST(Interp, RelationScanKeepsFileOrder) {
  Database db = int_db("r", {"a"}, {{3}, {1}, {2}, {1}});
  Relation out = eval_text("r", db);
  ASSERT_EQ(out.rows.size(), 4u);
  EXPECT_EQ(out.rows[0].find(Ident("a"))->as_int(), 3);
  EXPECT_EQ(out.rows[3].find(Ident("a"))->as_int(), 1);
}

TEST(Interp, SelectMapsAndRenames) {
  Database db = int_db("r", {"a", "b"}, {{1, 10}, {2, 20}});
  Relation out = eval_text("select({a * 2 as d, b}, r)", db);
  ASSERT_EQ(out.rows.size(), 2u);
  EXPECT_EQ(out.schema, (Schema{Ident("d"), Ident("b")}));
  EXPECT_EQ(out.rows[1].find(Ident("d"))->as_int(), 4);
}

TEST(Interp, JoinIsLeftMajor) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<int64_t>> lrows, rrows;
    for (int i = 0; i < int(rng.below(8)); ++i) {
      lrows.push_back({rng.range(0, 4), rng.range(0, 9)});
    }
    for (int i = 0; i < int(rng.below(8)); ++i) {
      rrows.push_back({rng.range(0, 4), rng.range(0, 9)});
    }
    Database db;
    testing::add_int_relation(db, "l", {"k", "x"}, lrows);
    testing::add_int_relation(db, "m", {"j", "y"}, rrows);
    Relation got = eval_text("join(k = j, l, m)", db);
    std::vector<Tuple> want = testing::oracle_join(
        db.require("l").rows, db.require("m").rows,
        [](const Tuple& l, const Tuple& r) {
          return l.find(Ident("k"))->as_int() == r.find(Ident("j"))->as_int();
        });
    ASSERT_EQ(got.rows.size(), want.size()) << "trial " << trial;
    for (size_t i = 0; i < want.size(); ++i) {
      EXPECT_EQ(Tuple::compare_total(got.rows[i], want[i]), 0)
          << "trial " << trial << " row " << i;
    }
  }
}

TEST(Interp, DedupKeepsFirstOccurrence) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<int64_t>> rows;
    for (int i = 0; i < int(rng.below(12)); ++i) {
      rows.push_back({rng.range(0, 3)});
    }
    Database db = int_db("r", {"a"}, rows);
    Relation got = eval_text("dedup(r)", db);
    std::vector<Tuple> want = testing::oracle_dedup(db.require("r").rows);
    ASSERT_EQ(got.rows.size(), want.size());
    for (size_t i = 0; i < want.size(); ++i) {
      EXPECT_EQ(Tuple::compare_total(got.rows[i], want[i]), 0);
    }
  }
}

TEST(Interp, AggregatesMatchFoldOracles) {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::vector<int64_t>> rows;
    int n = int(rng.below(10));
    for (int i = 0; i < n; ++i) rows.push_back({rng.range(-20, 20)});
    Database db = int_db("r", {"a"}, rows);
    std::vector<Value> col;
    for (const auto& t : db.require("r").rows) {
      col.push_back(*t.find(Ident("a")));
    }
    Relation out = eval_text(
        "select({count() as n, sum(a) as s, min(a) as lo, max(a) as hi, "
        "avg(a) as m}, r)",
        db);
    ASSERT_EQ(out.rows.size(), 1u);
    const Tuple& row = out.rows[0];
    EXPECT_EQ(*row.find(Ident("n")), testing::oracle_count(col));
    EXPECT_EQ(*row.find(Ident("s")), testing::oracle_sum(col));
    EXPECT_EQ(*row.find(Ident("lo")), testing::oracle_min(col));
    EXPECT_EQ(*row.find(Ident("hi")), testing::oracle_max(col));
    EXPECT_EQ(*row.find(Ident("m")), testing::oracle_avg(col));
  }
}

TEST(Interp, AggregatesSkipNulls) {
  Database db = int_db("r", {"a"}, {});
  // Nulls flow in through a conditional, so sum/min/max/avg skip rows while
  // count does not.
  Relation src = db.relations["r"];
  for (int64_t v : {5, -3, 9}) {
    Tuple t;
    t.bind(Ident("a"), Value::integer(v));
    src.rows.push_back(t);
  }
  db.relations["r"] = src;
  Relation out = eval_text(
      "select({count() as n, sum(x) as s, min(x) as lo, avg(x) as m}, "
      "select({if a > 0 then a else null as x}, r))",
      db);
  const Tuple& row = out.rows[0];
  EXPECT_EQ(row.find(Ident("n"))->as_int(), 3);  // count sees every row
  EXPECT_EQ(row.find(Ident("s"))->as_int(), 14);
  EXPECT_EQ(row.find(Ident("lo"))->as_int(), 5);
  EXPECT_EQ(row.find(Ident("m"))->as_int(), 7);
}

TEST(Interp, EmptyAggregatesAndHolders) {
  Database db = int_db("r", {"a"}, {});
  Relation out = eval_text(
      "select({count() as n, sum(a) as s, min(a) as lo, avg(a) as m}, r)",
      db);
  ASSERT_EQ(out.rows.size(), 1u);
  EXPECT_EQ(out.rows[0].find(Ident("n"))->as_int(), 0);
  EXPECT_EQ(out.rows[0].find(Ident("s"))->as_int(), 0);
  EXPECT_TRUE(out.rows[0].find(Ident("lo"))->is_null());
  EXPECT_TRUE(out.rows[0].find(Ident("m"))->is_null());

  // A plain column among aggregates holds the value from the last row.
  Database db2 = int_db("r", {"a", "b"}, {{1, 7}, {2, 8}, {3, 9}});
  Relation out2 = eval_text("select({sum(a) as s, b}, r)", db2);
  ASSERT_EQ(out2.rows.size(), 1u);
  EXPECT_EQ(out2.rows[0].find(Ident("s"))->as_int(), 6);
  EXPECT_EQ(out2.rows[0].find(Ident("b"))->as_int(), 9);

  // Aggregates may appear inside larger expressions.
  Relation out3 = eval_text("select({sum(a) * 10 + count() as z}, r)", db2);
  EXPECT_EQ(out3.rows[0].find(Ident("z"))->as_int(), 63);
}

TEST(Interp, GroupByFirstOccurrenceOrder) {
  Database db = int_db("r", {"g", "x"},
                       {{2, 1}, {1, 2}, {2, 3}, {3, 4}, {1, 5}});
  Relation out = eval_text("groupby({g, sum(x) as s}, [g], r)", db);
  auto groups = testing::oracle_group(db.require("r").rows, Ident("g"));
  ASSERT_EQ(out.rows.size(), groups.size());
  for (size_t i = 0; i < groups.size(); ++i) {
    EXPECT_EQ(out.rows[i].find(Ident("g"))->as_int(), groups[i].first);
    std::vector<Value> xs;
    for (const Tuple& t : groups[i].second) xs.push_back(*t.find(Ident("x")));
    EXPECT_EQ(*out.rows[i].find(Ident("s")), testing::oracle_sum(xs));
  }
}

TEST(Interp, OrderByIsStableWithNullsFirst) {
  Database db = int_db("r", {"k", "tag"}, {{2, 0}, {1, 1}, {2, 2}, {1, 3}});
  Relation out = eval_text("orderby([k], r)", db);
  ASSERT_EQ(out.rows.size(), 4u);
  // Equal keys keep their input order: tags 1,3 then 0,2.
  EXPECT_EQ(out.rows[0].find(Ident("tag"))->as_int(), 1);
  EXPECT_EQ(out.rows[1].find(Ident("tag"))->as_int(), 3);
  EXPECT_EQ(out.rows[2].find(Ident("tag"))->as_int(), 0);
  EXPECT_EQ(out.rows[3].find(Ident("tag"))->as_int(), 2);

  Relation desc = eval_text("orderby([k desc], r)", db);
  EXPECT_EQ(desc.rows[0].find(Ident("tag"))->as_int(), 0);

  // Ascending order puts nulls before every value.
  Database db2 = int_db("r", {"k"}, {{5}});
  Tuple t;
  t.bind(Ident("k"), Value::null());
  db2.relations["r"].rows.push_back(t);
  Relation out2 = eval_text("orderby([k], r)", db2);
  EXPECT_TRUE(out2.rows[0].find(Ident("k"))->is_null());
}

TEST(Interp, FilterKeepsOnlyLiterallyTrueRows) {
  Database db = int_db("r", {"a"}, {{1}, {2}, {3}});
  // A null predicate result drops the row rather than erroring.
  Relation out = eval_text("filter(if a = 2 then null else true, r)", db);
  ASSERT_EQ(out.rows.size(), 2u);
  // A non-boolean predicate is an error.
  EXPECT_THROW(eval_text("filter(a + 1, r)", db), Error);
}

TEST(Interp, DepJoinEmitsRightRowsOnly) {
  Database db = int_db("r", {"a"}, {{1}, {2}});
  Relation out = eval_text(
      "depjoin(select({a}, r) as d, select({d.a * 10 + a as z}, r))", db);
  ASSERT_EQ(out.rows.size(), 4u);
  EXPECT_EQ(out.schema, Schema{Ident("z")});
  EXPECT_EQ(out.rows[0].find(Ident("z"))->as_int(), 11);
  EXPECT_EQ(out.rows[1].find(Ident("z"))->as_int(), 12);
  EXPECT_EQ(out.rows[2].find(Ident("z"))->as_int(), 21);
  EXPECT_EQ(out.rows[3].find(Ident("z"))->as_int(), 22);
}

TEST(Interp, HashIndexMatchesItsDependentJoinReading) {
  Rng rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<std::vector<int64_t>> rows;
    for (int i = 0; i < int(rng.below(15)); ++i) {
      rows.push_back({rng.range(0, 5), rng.range(0, 99)});
    }
    Database db = int_db("r", {"k", "v"}, rows);
    Tuple ps;
    ps.bind(Ident("$p"), rng.chance(0.1) ? Value::null()
                                         : Value::integer(rng.range(-1, 6)));
    Relation idx = eval_text(
        "ahashidx(dedup(select({k}, r)) as s, filter(s.k = k, r), $p)", db,
        ps);
    Relation dj = eval_text(
        "depjoin(dedup(select({k}, r)) as s, filter(s.k = $p, filter(s.k = "
        "k, r)))",
        db, ps);
    EXPECT_TRUE(testing::same_rows(idx, dj)) << "trial " << trial;
  }
}

TEST(Interp, OrderedIndexUsesPerColumnBoxes) {
  Rng rng(19);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<std::vector<int64_t>> rows;
    for (int i = 0; i < int(rng.below(15)); ++i) {
      rows.push_back({rng.range(0, 20), rng.range(0, 99)});
    }
    Database db = int_db("r", {"k", "v"}, rows);
    int64_t lo = rng.range(-2, 22), hi = rng.range(-2, 22);
    Tuple ps;
    ps.bind(Ident("$lo"), Value::integer(lo));
    ps.bind(Ident("$hi"), Value::integer(hi));
    Relation got = eval_text(
        "aorderedidx(orderby([k], dedup(select({k}, r))) as s, "
        "filter(s.k = k, r), $lo, $hi)",
        db, ps);
    // The oracle scans keys in sorted order and keeps those inside the box.
    std::vector<Tuple> keys =
        testing::oracle_dedup(eval_text("orderby([k], r)", db).rows);
    std::vector<Tuple> want;
    for (const Tuple& kt : keys) {
      int64_t k = kt.find(Ident("k"))->as_int();
      if (k < lo || k > hi) continue;
      for (const Tuple& t : db.require("r").rows) {
        if (t.find(Ident("k"))->as_int() == k) want.push_back(t);
      }
    }
    ASSERT_EQ(got.rows.size(), want.size()) << "trial " << trial;
    for (size_t i = 0; i < want.size(); ++i) {
      EXPECT_EQ(Tuple::compare_total(got.rows[i], want[i]), 0);
    }
  }
}

TEST(Interp, TupleCrossNestsWithLastChildFastest) {
  Database db = int_db("r", {"a"}, {{1}});
  Relation out = eval_text(
      "atuple([alist(r as s, ascalar(7 as x)), "
      "atuple([ascalar(1 as y), ascalar(2 as z)]; cross)]; cross)",
      db);
  ASSERT_EQ(out.rows.size(), 1u);
  EXPECT_EQ(out.rows[0].find(Ident("x"))->as_int(), 7);
  EXPECT_EQ(out.rows[0].find(Ident("z"))->as_int(), 2);

  Relation ord = eval_text(
      "atuple([alist(r as s, atuple([ascalar(1 as i), ascalar(2 as i)]; "
      "concat)), alist(r as t, atuple([ascalar(10 as j), ascalar(20 as j)]; "
      "concat))]; cross)",
      db);
  ASSERT_EQ(ord.rows.size(), 4u);
  // Left-outermost loops: (1,10), (1,20), (2,10), (2,20).
  EXPECT_EQ(ord.rows[0].find(Ident("i"))->as_int(), 1);
  EXPECT_EQ(ord.rows[0].find(Ident("j"))->as_int(), 10);
  EXPECT_EQ(ord.rows[1].find(Ident("j"))->as_int(), 20);
  EXPECT_EQ(ord.rows[2].find(Ident("i"))->as_int(), 2);
}

TEST(Interp, ConditionalIsLazyAndNullTakesElse) {
  Database db = int_db("r", {"a"}, {{4}});
  // The untaken branch would divide by zero if it were evaluated.
  Relation out = eval_text(
      "select({if a > 0 then a else a / 0 as x}, r)", db);
  EXPECT_EQ(out.rows[0].find(Ident("x"))->as_int(), 4);

  Relation nul = eval_text(
      "select({if null then 1 else 2 as x}, r)", db);
  EXPECT_EQ(nul.rows[0].find(Ident("x"))->as_int(), 2);

  EXPECT_THROW(eval_text("select({if a then 1 else 2 as x}, r)", db), Error);
}

TEST(Interp, KleeneLogic) {
  EXPECT_EQ(eval_binop(BinOp::kAnd, Value::null(), Value::boolean(false)),
            Value::boolean(false));
  EXPECT_EQ(eval_binop(BinOp::kOr, Value::null(), Value::boolean(true)),
            Value::boolean(true));
  EXPECT_TRUE(
      eval_binop(BinOp::kAnd, Value::null(), Value::boolean(true)).is_null());
  EXPECT_TRUE(eval_binop(BinOp::kEq, Value::null(), Value::integer(3))
                  .is_null());
}

TEST(Interp, ArithmeticRules) {
  EXPECT_EQ(eval_binop(BinOp::kDiv, Value::integer(7), Value::integer(2)),
            Value::integer(3));
  EXPECT_THROW(eval_binop(BinOp::kDiv, Value::integer(1), Value::integer(0)),
               Error);
  // Mixed int/fixed arithmetic promotes to the wider scale.
  EXPECT_EQ(eval_binop(BinOp::kAdd, Value::fixed(150, 2), Value::integer(1)),
            Value::fixed(250, 2));
  // Dates shift by integer days and subtract to day counts.
  Value d = Value::date_from_iso("2024-03-01");
  EXPECT_EQ(eval_binop(BinOp::kAdd, d, Value::integer(2)).date_to_iso(),
            "2024-03-03");
  EXPECT_EQ(eval_binop(BinOp::kSub, eval_binop(BinOp::kAdd, d,
                                               Value::integer(2)),
                       d),
            Value::integer(2));
}

TEST(Interp, ExistsAndFirst) {
  Database db = int_db("r", {"a"}, {{5}, {9}});
  Relation out = eval_text(
      "select({exists(filter(a > 7, r)) as e, first(select({a}, r)) as f}, "
      "ascalar(0 as z))",
      db);
  EXPECT_TRUE(out.rows[0].find(Ident("e"))->as_bool());
  EXPECT_EQ(out.rows[0].find(Ident("f"))->as_int(), 5);
}

TEST(Interp, EmptyQueryAndEmptyTupleBase) {
  Database db = int_db("r", {"a"}, {{1}});
  EXPECT_EQ(eval_text("empty", db).rows.size(), 0u);
}

TEST(Interp, ParameterBindingFlowsThroughSigma) {
  Database db = int_db("r", {"a"}, {{1}, {5}, {9}});
  Tuple ps;
  ps.bind(Ident("$cut"), Value::integer(4));
  Relation out = eval_text("filter(a > $cut, r)", db, ps);
  ASSERT_EQ(out.rows.size(), 2u);
  // An unbound parameter surfaces as an evaluation error.
  EXPECT_THROW(eval_text("filter(a > $missing, r)", db), Error);
}

}  // namespace
}  // namespace strata

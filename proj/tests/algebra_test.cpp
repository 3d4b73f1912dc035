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

// Surface syntax, paths, schemas, staging, and catalog loading.

#include <fstream>

#include "gtest/gtest.h"
#include "strata/ast.hpp"
#include "strata/catalog.hpp"
#include "strata/parser.hpp"
#include "strata/schema.hpp"
#include "testutil.hpp"

namespace strata {
namespace {

using testing::int_db;

Catalog log_catalog() {
  Catalog cat;
  RelationDecl r;
  r.name = "log";
  r.columns = {{"id", ValueKind::kInt, 0},
               {"enter", ValueKind::kInt, 0},
               {"exit", ValueKind::kInt, 0}};
  cat.relations.push_back(r);
  return cat;
}

TEST(Parser, RoundTripsCanonicalForms) {
  const char* cases[] = {
      "log",
      "dedup(select({id}, log))",
      "filter(id = $pid && enter > 3, log)",
      "select({id as key, enter + 1 as at}, log)",
      "join(id_p = id_c, select({id as id_p}, log), select({id as id_c}, "
      "log))",
      "groupby({id, count() as n}, [id], log)",
      "orderby([enter, id desc], log)",
      "depjoin(select({id}, log) as d, filter(d.id = id, log))",
      "ascalar(1 + 2 as x)",
      "atuple([ascalar(1 as a), ascalar(2 as b)]; cross)",
      "atuple([ascalar(1 as a), ascalar(2 as a)]; concat)",
      "alist(log as s, ascalar(s.id as v))",
      "ahashidx(dedup(select({id}, log)) as s, filter(s.id = id, log), "
      "$pid)",
      "ahashidx(dedup(select({id, enter}, log)) as s, filter(s.id = id, "
      "log), ($a, $b))",
      "aorderedidx(dedup(select({enter}, log)) as s, filter(s.enter = "
      "enter, log), $lo, $hi)",
      "select({if id = 1 then enter else exit as z}, log)",
      "filter(not (id < 3 || exists(log)), log)",
      "select({first(select({id}, log)) as f}, log)",
      "empty",
  };
  for (const char* text : cases) {
    QueryPtr q = parse_query(text);
    EXPECT_EQ(print_query(q), text);
    EXPECT_TRUE(query_equal(parse_query(print_query(q)), q)) << text;
  }
}

TEST(Parser, RejectsMalformedInput) {
  const char* bad[] = {
      "select(id, log)",          // items must be braced
      "filter(, log)",            // missing predicate
      "alist(log, ascalar(1))",   // missing binder
      "atuple([ascalar(1 as a)])",  // missing tuple kind
      "log extra",                // trailing tokens
      "select({id as}, log)",     // dangling as
  };
  for (const char* text : bad) {
    EXPECT_THROW(parse_query(text), Error) << text;
  }
}

TEST(Parser, ExpressionPrecedence) {
  EXPECT_EQ(print_expr(parse_expr("1 + 2 * 3")), "1 + 2 * 3");
  EXPECT_EQ(print_expr(parse_expr("(1 + 2) * 3")), "(1 + 2) * 3");
  EXPECT_EQ(print_expr(parse_expr("a = 1 && b = 2 || c = 3")),
            "a = 1 && b = 2 || c = 3");
  // `and` and `or` are synonyms for the symbolic forms.
  EXPECT_TRUE(expr_equal(parse_expr("a = 1 and b = 2"),
                         parse_expr("a = 1 && b = 2")));
  EXPECT_TRUE(expr_equal(parse_expr("a or b"), parse_expr("a || b")));
}

TEST(Paths, PreorderEnumerationAndAccess) {
  QueryPtr q = parse_query(
      "filter(id = 1, depjoin(select({id}, log) as d, filter(d.id = id, "
      "log)))");
  std::vector<Path> ps = all_paths(q);
  ASSERT_EQ(ps.size(), 6u);  // filter, depjoin, select, log, filter, log
  EXPECT_EQ(path_to_string(ps[0]), "/");
  EXPECT_EQ(path_to_string(ps[1]), "/0");
  EXPECT_EQ(path_to_string(ps[2]), "/0/0");
  EXPECT_EQ(path_to_string(ps[3]), "/0/0/0");
  EXPECT_EQ(path_to_string(ps[4]), "/0/1");
  EXPECT_EQ(subterm_at(q, parse_path("/0/1"))->kind,
            QueryExpr::Kind::kFilter);
  EXPECT_EQ(subterm_at(q, parse_path("/0/0/0"))->relation, "log");
  EXPECT_THROW(subterm_at(q, parse_path("/3")), Error);

  QueryPtr swapped = replace_at(q, parse_path("/0/0"), parse_query("log"));
  EXPECT_EQ(print_query(swapped),
            "filter(id = 1, depjoin(log as d, filter(d.id = id, log)))");
  // replace_at copies; the original is untouched.
  EXPECT_EQ(subterm_at(q, parse_path("/0/0"))->kind,
            QueryExpr::Kind::kSelect);
}

TEST(Paths, StringFormRoundTrips) {
  for (const char* s : {"/", "/0", "/1/0/2"}) {
    EXPECT_EQ(path_to_string(parse_path(s)), s);
  }
  // The leading slash is optional on input.
  EXPECT_EQ(path_to_string(parse_path("0/1")), "/0/1");
  EXPECT_THROW(parse_path("/x"), Error);
  EXPECT_THROW(parse_path("//"), Error);
}

TEST(Schema, OperatorShapes) {
  Catalog cat = log_catalog();
  auto names = [&](const char* text) {
    std::string out;
    for (const Ident& id : schema_of(parse_query(text), cat)) {
      if (!out.empty()) out += " ";
      out += id.to_string();
    }
    return out;
  };
  EXPECT_EQ(names("log"), "id enter exit");
  EXPECT_EQ(names("select({id as key, enter}, log)"), "key enter");
  EXPECT_EQ(names("filter(id = 1, log)"), "id enter exit");
  EXPECT_EQ(names("join(id_a = id_b, select({id as id_a}, log), "
                  "select({id as id_b}, log))"),
            "id_a id_b");
  EXPECT_EQ(names("groupby({id, count() as n}, [id], log)"), "id n");
  // A dependent join emits the right side's rows only.
  EXPECT_EQ(names("depjoin(select({id}, log) as d, select({d.id + enter as "
                  "s}, log))"),
            "s");
  EXPECT_EQ(names("alist(log as s, ascalar(s.id as v))"), "v");
  EXPECT_EQ(names("atuple([ascalar(1 as a), ascalar(2 as b)]; cross)"),
            "a b");
  EXPECT_EQ(names("select({count() as n, sum(enter) as t}, log)"), "n t");

  // schema_of reports shapes; name resolution is check_names' job.
  EXPECT_THROW(check_names(parse_query("select({ghost}, log)"), cat), Error);
  EXPECT_THROW(schema_of(parse_query("nope"), cat), Error);
}

TEST(Schema, FreeNames) {
  Catalog cat = log_catalog();
  auto q = parse_query("filter(id = $pid && enter > $lo, log)");
  std::set<Ident> fn = free_names(q, cat);
  EXPECT_TRUE(fn.count(Ident("$pid")));
  EXPECT_TRUE(fn.count(Ident("$lo")));
  EXPECT_FALSE(fn.count(Ident("id")));  // bound by the relation

  // A binder's scoped names are not free below the binder.
  auto q2 = parse_query("alist(log as s, ascalar(s.id as v))");
  EXPECT_TRUE(free_names(q2, cat).empty());
}

TEST(Staging, RuntimeRelationalOperatorsAreViolations) {
  Catalog cat = log_catalog();
  for (const char* text : {
           "join(id_a = id_b, select({id as id_a}, log), select({id as "
           "id_b}, log))",
           "groupby({id, count() as n}, [id], log)",
           "orderby([enter], log)",
           "dedup(log)",
           "log",
       }) {
    StagingReport r = stage_check(parse_query(text), cat);
    EXPECT_FALSE(r.serializable()) << text;
    ASSERT_FALSE(r.violations.empty());
  }
  // The same operators are fine on the compile side of a layout binder.
  StagingReport ok = stage_check(
      parse_query("alist(dedup(orderby([id], log)) as s, ascalar(s.id as "
                  "v))"),
      cat);
  EXPECT_TRUE(ok.serializable()) << ok.to_string();
}

TEST(Staging, ParametersMayNotEnterCompileZones) {
  Catalog cat = log_catalog();
  StagingReport r = stage_check(
      parse_query("alist(filter(id = $p, log) as s, ascalar(s.id as v))"),
      cat);
  EXPECT_FALSE(r.serializable());
  EXPECT_NE(r.to_string().find("$p"), std::string::npos);

  // In lookup position, parameters are fine.
  StagingReport ok = stage_check(
      parse_query("ahashidx(dedup(select({id}, log)) as s, "
                  "alist(filter(s.id = id, log) as t, ascalar(t.enter as "
                  "e)), $p)"),
      cat);
  EXPECT_TRUE(ok.serializable()) << ok.to_string();
}

TEST(Staging, RuntimeBinderCannotFeedStoredScalars) {
  Catalog cat = log_catalog();
  // The dependent join sits at run time, so its binder is run-bound; a
  // stored scalar on its right side cannot read it.
  StagingReport r = stage_check(
      parse_query("depjoin(alist(log as s, ascalar(s.id as v)) as d, "
                  "ascalar(d.v as w))"),
      cat);
  EXPECT_FALSE(r.serializable());

  // Used from a run-time projection instead, the same binder is fine.
  StagingReport ok = stage_check(
      parse_query("depjoin(alist(log as s, ascalar(s.id as v)) as d, "
                  "select({d.v + w as z}, alist(log as u, ascalar(u.id as "
                  "w))))"),
      cat);
  EXPECT_TRUE(ok.serializable()) << ok.to_string();
}

TEST(Staging, ContextAndBinderStages) {
  Catalog cat = log_catalog();
  auto q = parse_query(
      "filter(v > $p, alist(dedup(select({id}, log)) as s, ascalar(s.id as "
      "v)))");
  (void)cat;
  EXPECT_EQ(context_stage(q, {}), Stage::kRun);
  EXPECT_EQ(context_stage(q, {0}), Stage::kRun);      // the list itself
  EXPECT_EQ(context_stage(q, {0, 0}), Stage::kCompile);  // its key side
  auto stages = binder_stages(q, {0, 1});
  ASSERT_TRUE(stages.count("s"));
  EXPECT_EQ(stages.at("s"), Stage::kCompile);
}

TEST(Catalog, ParsesDeclarationsAndLoadsCsv) {
  std::string dir = ::testing::TempDir();
  {
    std::ofstream f(dir + "/ev.csv");
    f << "id,name,score,when,ok\n";
    f << "1,\"a,b\",12.5,2024-03-01,true\n";
    f << "2,plain,7,2024-03-02,false\n";
    f << "3,,0.25,2024-03-03,1\n";  // empty unquoted string field -> null
  }
  {
    std::ofstream f(dir + "/cat.txt");
    f << "# catalog under test\n";
    f << "relation ev ev.csv\n";
    f << "col id int\ncol name string\ncol score fixed(2)\n";
    f << "col when date\ncol ok bool\n";
  }
  Database db = load_database_file(dir + "/cat.txt");
  const Relation& ev = db.require("ev");
  ASSERT_EQ(ev.rows.size(), 3u);
  EXPECT_EQ(ev.rows[0].find(Ident("name"))->as_string(), "a,b");
  EXPECT_EQ(ev.rows[0].find(Ident("score"))->to_text(), "12.50");
  EXPECT_TRUE(ev.rows[2].find(Ident("name"))->is_null());
  EXPECT_TRUE(ev.rows[2].find(Ident("ok"))->as_bool());

  // Row order is the file order.
  EXPECT_EQ(ev.rows[1].find(Ident("id"))->as_int(), 2);

  // to_csv round-trips through the same quoting rules.
  std::string csv = to_csv(ev);
  EXPECT_NE(csv.find("\"a,b\""), std::string::npos);
  EXPECT_NE(csv.find("2024-03-02"), std::string::npos);
}

TEST(Catalog, IngestErrorsNameRowAndColumn) {
  std::string dir = ::testing::TempDir();
  {
    std::ofstream f(dir + "/bad.csv");
    f << "id\n1\n12x\n";
  }
  {
    std::ofstream f(dir + "/cat2.txt");
    f << "relation b bad.csv\ncol id int\n";
  }
  try {
    load_database_file(dir + "/cat2.txt");
    FAIL() << "expected a load error";
  } catch (const Error& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("record 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column 'id'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("bad integer"), std::string::npos) << msg;
  }
}

TEST(Catalog, SampleTakesAPrefix) {
  Database db = int_db("r", {"a"}, {{1}, {2}, {3}, {4}, {5}});
  Database s = sample_database(db, 2);
  ASSERT_EQ(s.require("r").rows.size(), 2u);
  EXPECT_EQ(s.require("r").rows[0].find(Ident("a"))->as_int(), 1);
  EXPECT_EQ(s.require("r").rows[1].find(Ident("a"))->as_int(), 2);
}

}  // namespace
}  // namespace strata

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
//
// Abstract syntax for the query-and-layout language.
//
// The language is relational algebra over ordered sequences (select, filter,
// join, groupby, orderby, dedup, depjoin) extended with layout operators that
// double as data descriptions: ascalar, atuple, alist, ahashidx, aorderedidx,
// empty.  A layout operator has a relational reading (used by the reference
// interpreter) and a byte-level reading (used by type inference and the
// serializer), and the point of the system is that the two agree.
//
// Nodes are immutable after construction and shared freely; rewrites build new
// spines and reuse untouched subtrees.

#ifndef STRATA_AST_H_
#define STRATA_AST_H_

#include <memory>
#include <string>
#include <vector>

#include "strata/value.hpp"

namespace strata {

struct ScalarExpr;
struct QueryExpr;
using ExprPtr = std::shared_ptr<const ScalarExpr>;
using QueryPtr = std::shared_ptr<const QueryExpr>;

// A scalar expression.  Aggregates (count/sum/min/max/avg) may appear only in
// select and groupby output lists; exists/first embed a subquery.
struct ScalarExpr {
  enum class Kind {
    kConst,   // value
    kName,    // name
    kBinop,   // op, a, b
    kNot,     // a
    kIf,      // a (cond), b (then), c (else)
    kExists,  // query
    kFirst,   // query (single-column; null when the subquery is empty)
    kCount,   // no operands
    kSum,     // a
    kMin,     // a
    kMax,     // a
    kAvg,     // a
  };

  Kind kind;
  Value value;    // kConst
  Ident name;     // kName
  BinOp op{};     // kBinop
  ExprPtr a, b, c;
  QueryPtr query;  // kExists / kFirst

  bool is_aggregate_node() const {
    return kind == Kind::kCount || kind == Kind::kSum || kind == Kind::kMin ||
           kind == Kind::kMax || kind == Kind::kAvg;
  }
};

// A select/groupby output item, or the payload of ascalar: an expression and
// the unqualified field name it defines.
struct NamedExpr {
  std::string name;
  ExprPtr expr;
};

enum class TupleKind : uint8_t { kCross, kConcat };
enum class SortDir : uint8_t { kAsc, kDesc };

struct SortKey {
  ExprPtr expr;
  SortDir dir = SortDir::kAsc;
};

// A query.  `children` holds the query subterms in canonical order; paths into
// a query are sequences of child indices over this vector.
struct QueryExpr {
  enum class Kind {
    kRelation,    // relation(name); no children
    kDedup,       // dedup(q)
    kSelect,      // select({items}, q)
    kFilter,      // filter(pred, q)
    kJoin,        // join(pred, q1, q2)
    kGroupBy,     // groupby({items}, [keys], q)
    kOrderBy,     // orderby([sort_keys], q)
    kDepJoin,     // depjoin(q1 as scope, q2); children [q1, q2]
    kAScalar,     // ascalar(expr as name); no children
    kATuple,      // atuple([q...]; cross|concat)
    kAList,       // alist(q_keys as scope, q_value); children [q_keys, q_value]
    kAHashIdx,    // ahashidx(q_keys as scope, q_value, lookup keys)
    kAOrderedIdx, // aorderedidx(q_keys as scope, q_value, lo, hi)
    kAEmpty,      // empty
  };

  Kind kind;
  std::string relation;            // kRelation
  std::vector<NamedExpr> items;    // kSelect / kGroupBy outputs
  std::vector<Ident> keys;         // kGroupBy grouping fields
  std::vector<SortKey> sort_keys;  // kOrderBy
  ExprPtr pred;                    // kFilter / kJoin
  std::string scope;               // binder of kDepJoin/kAList/kAHashIdx/kAOrderedIdx
  NamedExpr scalar;                // kAScalar
  TupleKind tuple_kind{};          // kATuple
  std::vector<ExprPtr> key_exprs;  // kAHashIdx lookup keys
  std::vector<ExprPtr> lo_exprs;   // kAOrderedIdx lower bounds (inclusive)
  std::vector<ExprPtr> hi_exprs;   // kAOrderedIdx upper bounds (inclusive)
  std::vector<QueryPtr> children;

  bool is_layout_op() const {
    return kind == Kind::kAScalar || kind == Kind::kATuple ||
           kind == Kind::kAList || kind == Kind::kAHashIdx ||
           kind == Kind::kAOrderedIdx || kind == Kind::kAEmpty;
  }
  // True for binders: depjoin/alist/ahashidx/aorderedidx.
  bool binds_scope() const { return !scope.empty(); }
};

const char* query_kind_name(QueryExpr::Kind k);

// --- Expression constructors -------------------------------------------------

ExprPtr e_const(Value v);
ExprPtr e_int(int64_t v);
ExprPtr e_bool(bool v);
ExprPtr e_str(std::string s);
ExprPtr e_name(Ident id);
ExprPtr e_name(std::string base);
ExprPtr e_name(std::string scope, std::string base);
ExprPtr e_param(std::string name);  // "$" is prepended if absent
ExprPtr e_binop(BinOp op, ExprPtr a, ExprPtr b);
ExprPtr e_and(ExprPtr a, ExprPtr b);
ExprPtr e_or(ExprPtr a, ExprPtr b);
ExprPtr e_eq(ExprPtr a, ExprPtr b);
ExprPtr e_not(ExprPtr a);
ExprPtr e_if(ExprPtr cond, ExprPtr then_e, ExprPtr else_e);
ExprPtr e_exists(QueryPtr q);
ExprPtr e_first(QueryPtr q);
ExprPtr e_count();
ExprPtr e_sum(ExprPtr a);
ExprPtr e_min(ExprPtr a);
ExprPtr e_max(ExprPtr a);
ExprPtr e_avg(ExprPtr a);

// Splits nested && into a conjunct list, and the inverse.
std::vector<ExprPtr> conjuncts_of(const ExprPtr& e);
ExprPtr and_all(const std::vector<ExprPtr>& cs);  // empty list => true

// --- Query constructors ------------------------------------------------------

QueryPtr q_relation(std::string name);
QueryPtr q_dedup(QueryPtr q);
QueryPtr q_select(std::vector<NamedExpr> items, QueryPtr q);
QueryPtr q_filter(ExprPtr pred, QueryPtr q);
QueryPtr q_join(ExprPtr pred, QueryPtr a, QueryPtr b);
QueryPtr q_groupby(std::vector<NamedExpr> items, std::vector<Ident> keys,
                   QueryPtr q);
QueryPtr q_orderby(std::vector<SortKey> keys, QueryPtr q);
QueryPtr q_depjoin(QueryPtr lhs, std::string scope, QueryPtr rhs);
QueryPtr q_ascalar(NamedExpr item);
QueryPtr q_ascalar(ExprPtr e);  // the expression must be a name; it names the field
QueryPtr q_atuple(std::vector<QueryPtr> qs, TupleKind kind);
QueryPtr q_alist(QueryPtr keys, std::string scope, QueryPtr value);
QueryPtr q_ahashidx(QueryPtr keys, std::string scope, QueryPtr value,
                    std::vector<ExprPtr> lookup);
QueryPtr q_aorderedidx(QueryPtr keys, std::string scope, QueryPtr value,
                       std::vector<ExprPtr> lo, std::vector<ExprPtr> hi);
QueryPtr q_empty();

// Rebuilds `q` with a new child vector (same length).
QueryPtr with_children(const QueryPtr& q, std::vector<QueryPtr> children);

// --- Paths -------------------------------------------------------------------

// A path addresses a subterm by a sequence of child indices from the root.
using Path = std::vector<int>;

std::string path_to_string(const Path& p);  // "/" for the root, else "/0/1"
Path parse_path(const std::string& text);

// The subterm at `p`; throws on an out-of-range step.
QueryPtr subterm_at(const QueryPtr& root, const Path& p);
// Rebuilds `root` with the subterm at `p` replaced by `sub`.
QueryPtr replace_at(const QueryPtr& root, const Path& p, const QueryPtr& sub);
// Every subterm path of `root` in preorder (the root path comes first).
std::vector<Path> all_paths(const QueryPtr& root);

// --- Structural operations ---------------------------------------------------

bool expr_equal(const ExprPtr& a, const ExprPtr& b);
bool query_equal(const QueryPtr& a, const QueryPtr& b);

// Structural equality after consistently renaming binder scopes; used to
// compare rewrite outputs independent of fresh-name choices.
bool query_equal_modulo_scopes(const QueryPtr& a, const QueryPtr& b);

// All idents mentioned in expressions of the node itself (not its children):
// predicate/item/sort/bound expressions and groupby keys.
void collect_node_idents(const QueryExpr& q, std::vector<Ident>* out);
// All idents mentioned anywhere in an expression, including subqueries.
void collect_expr_idents(const ExprPtr& e, std::vector<Ident>* out);
// Immediate exists/first subqueries of an expression (no recursion into them).
void collect_expr_subqueries(const ExprPtr& e, std::vector<QueryPtr>* out);
// All expressions attached to the node itself: predicates, items, sort keys,
// scalar payload, and index lookup bounds.
void collect_node_exprs(const QueryExpr& q, std::vector<ExprPtr>* out);

// True if any expression in `e` is an aggregate.
bool contains_aggregate(const ExprPtr& e);
// True if any select item in `items` contains an aggregate.
bool has_aggregates(const std::vector<NamedExpr>& items);

// Replaces every occurrence of expression `from` (structural equality) in `e`
// by `to`.
ExprPtr substitute_expr(const ExprPtr& e, const ExprPtr& from,
                        const ExprPtr& to);
// Replaces name `from` by expression `to`.
ExprPtr substitute_name(const ExprPtr& e, const Ident& from, const ExprPtr& to);

// Qualifies by `scope` every free occurrence of the unqualified names in
// `fields` (used when moving a predicate under a binder).
ExprPtr qualify_names(const ExprPtr& e, const std::vector<Ident>& fields,
                      const std::string& scope);

// Largest N over identifiers/scopes of the form _gN in the term, or 0.
int max_fresh_index(const QueryPtr& q);

// Deterministic fresh-name source: _g<N>, _g<N+1>, ...
class FreshGen {
 public:
  explicit FreshGen(int next) : next_(next) {}
  explicit FreshGen(const QueryPtr& q) : next_(max_fresh_index(q) + 1) {}
  std::string fresh() { return "_g" + std::to_string(next_++); }

 private:
  int next_;
};

// --- Printing ----------------------------------------------------------------

// Compact canonical form; parse(print_query(q)) reproduces q exactly.
std::string print_query(const QueryPtr& q);
std::string print_expr(const ExprPtr& e);

// Indented multi-line form for human consumption.
std::string pretty_query(const QueryPtr& q);

}  // namespace strata

#endif  // STRATA_AST_H_

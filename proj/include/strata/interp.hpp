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

#ifndef STRATA_INTERP_H_
#define STRATA_INTERP_H_

// The reference interpreter: every operator evaluated under its relational
// (ordered-sequence) semantics.  This is the ground truth that the rewrite
// rules and the compiled virtual machine are tested against; it favours
// clarity over speed.
//
// Ordering rules are part of the contract: joins iterate the left side
// outermost, dedup and groupby keep first-appearance order, orderby is a
// stable sort, and the index operators produce the same sequences as their
// depjoin desugarings.

#include <map>
#include <memory>

#include "strata/ast.hpp"
#include "strata/catalog.hpp"

namespace strata {

// Caches shared across one evaluation: static schemas, closed-subquery
// results (a closed subquery ignores sigma, so its value can be reused), and
// closedness decisions.  Keys hold owning pointers so that cached nodes stay
// alive for the cache's lifetime; otherwise a recycled allocation could
// collide with a stale entry.
struct NodeLess {
  bool operator()(const QueryPtr& a, const QueryPtr& b) const {
    return a.get() < b.get();
  }
};

struct EvalCaches {
  std::map<QueryPtr, Schema, NodeLess> schemas;
  std::map<QueryPtr, bool, NodeLess> closed;
  std::map<QueryPtr, Relation, NodeLess> memo;
};

struct EvalContext {
  const Database* db = nullptr;
  Tuple sigma;  // outer bindings: parameters plus enclosing binder rows
  std::shared_ptr<EvalCaches> caches = std::make_shared<EvalCaches>();

  EvalContext() = default;
  explicit EvalContext(const Database& d) : db(&d) {}
  EvalContext(const Database& d, Tuple s) : db(&d), sigma(std::move(s)) {}

  // Same database and caches, different bindings.
  EvalContext with_sigma(Tuple s) const {
    EvalContext out = *this;
    out.sigma = std::move(s);
    return out;
  }
};

Relation eval_query(const QueryPtr& q, const EvalContext& ctx);
Value eval_expr(const ExprPtr& e, const EvalContext& ctx);

// Select applied to an already-evaluated relation.  With no aggregates each
// tuple maps through the items; with any aggregate the result is a single
// tuple where aggregates fold over `r` and other items are evaluated on the
// last tuple (over an empty input: count()=0, sum=0, everything else null).
Relation eval_select(const std::vector<NamedExpr>& items, const Relation& r,
                     const EvalContext& ctx);

Relation eval_groupby(const std::vector<NamedExpr>& items,
                      const std::vector<Ident>& keys, const Relation& r,
                      const EvalContext& ctx);
Relation eval_orderby(const std::vector<SortKey>& keys, const Relation& r,
                      const EvalContext& ctx);
Relation eval_dedup(const Relation& r);

// Environment extension sigma ∪ t: row fields replace same-named entries.
Tuple env_extend(const Tuple& env, const Tuple& row);

}  // namespace strata

#endif  // STRATA_INTERP_H_

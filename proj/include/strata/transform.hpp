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

#ifndef STRATA_TRANSFORM_H_
#define STRATA_TRANSFORM_H_

// The rewrite engine: contexts, partitioning, and the rule catalog.
//
// A rule rewrites the subterm at a path and leaves the rest of the program
// alone; apply_rule returns the whole rewritten program.  Every rule preserves
// the interpreter's output for the whole program.  Most rules preserve the
// exact output sequence; the partition-based rules (elim-range-filter,
// elim-groupby, join-to-pairs) and commute-join reorder rows into the
// first-occurrence order of their partition keys and are equal as multisets.
// Rules check their own applicability and report a reason when they decline,
// so a search procedure can probe candidate paths cheaply.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "strata/ast.hpp"
#include "strata/catalog.hpp"
#include "strata/value.hpp"

namespace strata {

// A program with a hole: the subterm at `path` has been removed and can be
// replaced by plug().
struct QueryContext {
  QueryPtr root;
  Path path;

  QueryPtr plug(const QueryPtr& sub) const {
    return replace_at(root, path, sub);
  }
};

// Splits `q` into the context around `path` and the subterm there.
// Plugging the subterm back into the context reproduces `q`.
std::pair<QueryContext, QueryPtr> split_context(const QueryPtr& q,
                                                const Path& path);

// The two halves of a partition of `q` by the parameter-free expression `e`:
// `keys` enumerates the distinct values of `e` over `q` (first-occurrence
// order) under the field name `key_name`, and `values`, which has a free
// binder `scope`, restricts `q` to the rows of one partition.
struct PartitionResult {
  QueryPtr keys;    // dedup(select({key_name -> e}, q))
  QueryPtr values;  // filter(scope.key_name = e, q)
  std::string key_name;
};

// Builds the partition of `q` by `e` under the binder `scope`.  The key field
// is named after `e` when `e` is a plain name and generated fresh otherwise;
// the second overload pins the name.  Rejects expressions that reference a
// parameter: partitions are enumerated when the layout is built, before
// parameter values exist.
PartitionResult partition(const QueryPtr& q, const ExprPtr& e,
                          const std::string& scope);
PartitionResult partition(const QueryPtr& q, const ExprPtr& e,
                          const std::string& scope,
                          const std::string& key_name);

// The parameter domain used by predicate-precompute: a finite (possibly
// partial) list of values the parameter is expected to take.  The rewrite is
// correct even when the parameter falls outside the list.
struct ParamDomain {
  Ident parameter;
  std::vector<Value> values;
};

// Per-rule knobs.  Every field is optional; rules that need one say so in
// their applicability message.
struct RuleAux {
  // Which conjunct of a filter predicate to act on (split-filter,
  // elim-eq-filter).  Defaults to the only sensible choice when unambiguous.
  std::optional<int> conjunct;
  // Which hoistable subterm of a predicate to act on, indexing the preorder
  // enumeration used by hoist-static-from-filter.  Defaults to the first.
  std::optional<int> term;
  // Which side of a join to push a filter into: 0 = left, 1 = right.
  std::optional<int> side;
  // Parameter domain for predicate-precompute.
  std::optional<ParamDomain> domain;
};

// Names of all catalog rules, in catalog order.
const std::vector<std::string>& rule_names();

// Empty when `rule` applies to the subterm of `root` at `path`; otherwise a
// description of why it does not.
std::optional<std::string> why_not_applicable(const std::string& rule,
                                              const QueryPtr& root,
                                              const Path& path,
                                              const RuleAux& aux,
                                              const Catalog& cat);

inline bool rule_applicable(const std::string& rule, const QueryPtr& root,
                            const Path& path, const RuleAux& aux,
                            const Catalog& cat) {
  return !why_not_applicable(rule, root, path, aux, cat).has_value();
}

// Applies `rule` to the subterm of `root` at `path` and returns the rewritten
// program.  Throws Error with the applicability reason when the rule does not
// apply.  Fresh names never collide with names already in `root`.
QueryPtr apply_rule(const std::string& rule, const QueryPtr& root,
                    const Path& path, const RuleAux& aux, const Catalog& cat);

}  // namespace strata

#endif  // STRATA_TRANSFORM_H_

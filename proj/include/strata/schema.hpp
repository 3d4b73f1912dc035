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

#ifndef STRATA_SCHEMA_H_
#define STRATA_SCHEMA_H_

// Output schemas, free names, and the staging checker.
//
// A query evaluates in two stages.  Layout construction happens at compile
// time; the residual program runs against the stored bytes at query time.
// An expression sits in the compile-time stage when some enclosing position
// is the key argument of alist/ahashidx/aorderedidx or the payload of
// ascalar; everything else is run time.  A query is serializable when every
// name is used at the stage where it is bound (relation columns bind at
// compile time, parameters at run time, binders and select outputs at the
// stage of their introduction) and no join, groupby, orderby, or dedup is
// left in the run-time stage.  depjoin is a pure run-time operator and is
// always allowed there.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "strata/ast.hpp"
#include "strata/catalog.hpp"

namespace strata {

enum class Stage { kCompile, kRun };

inline const char* stage_name(Stage s) {
  return s == Stage::kCompile ? "compile-time" : "run-time";
}

// Output schema of `q`; deterministic and independent of data.  Throws on
// unknown relations and on malformed shapes (e.g. mismatched concat arms).
Schema schema_of(const QueryPtr& q, const Catalog& cat);

// Deep name validation: every name use must resolve (to an input field, an
// enclosing binder field, or a parameter) and no operator may emit duplicate
// output names.  Throws Error describing the first offence.
void check_names(const QueryPtr& q, const Catalog& cat);

// Names referenced but not bound within the term.  Parameters are always
// free; relation columns are bound by the scan that produces them.
std::set<Ident> free_names(const QueryPtr& q, const Catalog& cat);
std::set<Ident> free_names(const ExprPtr& e, const Catalog& cat);

struct StagingViolation {
  Path path;  // the query node the problem was found at
  std::string message;
};

struct StagingReport {
  std::vector<StagingViolation> violations;

  bool serializable() const { return violations.empty(); }
  std::string to_string() const;
};

// Checks the staging discipline described above.  `params` lists declared
// run-time parameters; names beginning with '$' are treated as parameters
// whether or not they are listed.  Violations are reported as data.
StagingReport stage_check(const QueryPtr& q, const Catalog& cat,
                          const std::set<Ident>& params = {});

// The stage of the subterm at `path` (compile if any step enters a layout
// operator's key argument).
Stage context_stage(const QueryPtr& root, const Path& path);

// Binder scopes visible to the subterm at `path`, with the stage each one
// binds at.
std::map<std::string, Stage> binder_stages(const QueryPtr& root,
                                           const Path& path);

}  // namespace strata

#endif  // STRATA_SCHEMA_H_

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

#ifndef STRATA_LOWER_H_
#define STRATA_LOWER_H_

// Lowering: turn the run-time fragment of a staged query into an iterator
// program that reads the serialized buffer.
//
// Every run-time operator becomes one iterator, named after its path.  A
// reader iterator takes the byte offset its node instance starts at, the
// query parameters, and one tuple per enclosing run-time depjoin binder; it
// yields one flat tuple per output row, fields ordered like the node's
// schema.  All widths, header elisions, and index geometry constants are
// baked in from the inferred layout type — the same type the serializer laid
// the bytes out with.
//
// Operators with no generated reader (join, group-by, order-by, dedup, and
// base relation scans in a run-time position, plus exists/first subqueries in
// run-time expressions) raise LoweringError; the staging check rejects most
// of these earlier.
//
// Each aggregate in a run-time select compiles to an accumulator that is
// updated on every row of the drained child, whether or not the value ends up
// used; a conditional whose untaken branch contains an aggregate that would
// fail (say, a sum over strings) therefore traps here but not in the
// reference evaluator.  None of the rewrite rules produce that shape.

#include <cstdint>
#include <vector>

#include "strata/ast.hpp"
#include "strata/catalog.hpp"
#include "strata/ir.hpp"
#include "strata/layout_type.hpp"
#include "strata/value.hpp"

namespace strata {

struct LoweringError : Error {
  using Error::Error;
};

struct LoweredPlan {
  IRProgram program;
  Schema schema;                        // output column names, in order
  std::vector<Ident> params;            // run-time parameters, first use first
  std::vector<ColumnDecl> param_decls;  // inferred kind and scale per parameter
};

// Generates the reader program for `q`'s run-time fragment.  `typed` must
// describe the same query over the database the buffer was serialized from.
// The returned program is guaranteed well typed (lowering itself throws
// otherwise).
LoweredPlan lower(const QueryPtr& q, const Catalog& cat,
                  const TypedLayout& typed);

// Runs the plan over a serialized buffer.  `params` must bind every entry of
// plan.params; results are decoded into rows under the plan's schema.
Relation run_plan(const LoweredPlan& plan, const std::vector<uint8_t>& buffer,
                  const Tuple& params, const RunLimits& limits = {});

}  // namespace strata

#endif  // STRATA_LOWER_H_

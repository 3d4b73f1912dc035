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

#ifndef STRATA_OPTIMIZER_H_
#define STRATA_OPTIMIZER_H_

// Cost-guided layout selection.
//
// The optimizer turns a plain relational query into a query over stored
// layouts by chaining catalog rules, so every output it produces is reachable
// from the input by rewrites that are individually semantics-preserving, and
// each run records the exact rule trace it took.  The search is a fixed
// phase sequence rather than a general planner:
//
//   1. merge adjacent filters so later phases see whole conjunctions;
//   2. convert each run-time join, innermost first, to whichever of
//      join-to-nested / join-to-hash / join-to-pairs yields the cheapest
//      finished plan;
//   3. turn parameterized equality conjuncts into hash-index probes
//      (split-filter, elim-eq-filter, then precompute-static on the value
//      side);
//   4. turn parameterized inclusive ranges into ordered-index scans the same
//      way (elim-range-filter);
//   5. materialize every remaining compile-time-evaluable zone that still
//      sits in a run-time position (precompute-static), outermost first.
//
// Costs come from a row-limited sample of the database: the layout types
// inferred over the sample give element counts, and a simple per-operator
// model charges scans linearly, hash probes a constant, and ordered scans a
// logarithm plus a selectivity fraction.  An unserializable program costs
// infinity.  The materialize-only plan (phase 5 alone) is always costed as a
// baseline, and the optimizer never returns anything it estimates to be
// worse than that baseline.

#include <cstdint>
#include <string>
#include <vector>

#include "strata/ast.hpp"
#include "strata/catalog.hpp"
#include "strata/transform.hpp"

namespace strata {

// Knobs for the cost model and the sampling step.  All costs are unitless;
// only comparisons between plans matter.
struct CostParams {
  // Rows kept per relation when sampling the database for costing.
  int64_t sample_rows = 1000;
  // Charge per element visited in a list scan.
  double scan_step = 1.0;
  // Charge per scalar decoded.
  double decode_step = 1.0;
  // Charge per expression evaluated over one row.
  double expr_step = 0.5;
  // Flat charge for one hash-index probe.
  double hash_probe = 8.0;
  // Charge per level of an ordered index's binary search.
  double search_step = 2.0;
  // Expected fraction of an ordered index's keys inside a probed range.
  double range_selectivity = 0.25;
  // Plans whose serialized size can exceed this many bytes (over the costing
  // sample) are rejected outright.
  int64_t max_blob_bytes = int64_t{1} << 30;
};

// Parses "key = value" lines (one per line, '#' comments) into CostParams,
// starting from the defaults.  Unknown keys are an error.
CostParams parse_cost_params(const std::string& text);

// Estimated cost of running `q` against its serialized layout, using
// `sample` for cardinalities.  Infinity when `q` cannot be serialized or
// exceeds max_blob_bytes.
double estimate_cost(const QueryPtr& q, const Database& sample,
                     const CostParams& params = {});

// One applied rewrite; a trace replays with replay_trace.
struct TraceStep {
  std::string rule;
  Path path;
  RuleAux aux;
};

// A trace as text, one step per line: the rule name, the path, then any aux
// fields as "key=value" (domains as param=v1,v2,...).  parse_script accepts
// the same format with blank lines and '#' comments.
std::string trace_to_script(const std::vector<TraceStep>& trace);
std::vector<TraceStep> parse_script(const std::string& text);

// Applies each step in order; throws Error (with the rule's reason) if a
// step does not apply.
QueryPtr replay_trace(const QueryPtr& q, const std::vector<TraceStep>& trace,
                      const Catalog& cat);

struct OptimizeResult {
  QueryPtr query;
  std::vector<TraceStep> trace;
  double cost = 0;           // estimated cost of `query`
  double baseline_cost = 0;  // estimated cost of the materialize-only plan
  std::string report;        // human-readable summary of what was done
};

// The materialize-only plan: store every compile-time-evaluable zone as-is
// and keep the residual query running on top.  Used as the cost baseline.
OptimizeResult materialize_only(const QueryPtr& q, const Database& db,
                                const CostParams& params = {});

// Full phase sequence; returns the cheaper of the searched plan and the
// materialize-only baseline.
OptimizeResult optimize(const QueryPtr& q, const Database& db,
                        const CostParams& params = {});

}  // namespace strata

#endif  // STRATA_OPTIMIZER_H_

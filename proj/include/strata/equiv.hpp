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

#ifndef STRATA_EQUIV_H_
#define STRATA_EQUIV_H_

// Randomized equivalence testing: run two programs against generated
// databases and parameter bindings and compare outputs.  Used to validate
// rewrite rules (the interpreter is the oracle) and exposed through the CLI
// so users can vet their own rewrites.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "strata/ast.hpp"
#include "strata/catalog.hpp"
#include "strata/value.hpp"

namespace strata {

// One trial's inputs: a database and parameter bindings.
struct Fixture {
  Database db;
  Tuple sigma;
  std::string label;
};

// Produces the fixture for trial `i`.  Must be deterministic in `i` so a
// failure can be replayed and shrunk.
using FixtureGen = std::function<Fixture(size_t)>;

// How outputs are compared.  Most rules preserve the exact sequence; the
// partition-based rules reorder rows into a documented key order and are
// compared as multisets.
enum class EqMode { kSequence, kMultiset };

struct EquivOptions {
  EqMode mode = EqMode::kSequence;
  size_t trials = 64;
  bool shrink = true;
};

struct Counterexample {
  Fixture fixture;     // shrunk when options.shrink is set
  std::string detail;  // first observed divergence
  size_t trial = 0;
};

struct EquivVerdict {
  bool equivalent = true;
  std::optional<Counterexample> counterexample;
  size_t trials_run = 0;

  std::string to_string() const;
};

// Runs both programs on `trials` fixtures and compares outputs.  A trial
// where both sides fail identically counts as agreement; a one-sided failure
// is a counterexample.  The first divergence stops the run.
EquivVerdict check_equivalence(const QueryPtr& q, const QueryPtr& q2,
                               const FixtureGen& gen,
                               const EquivOptions& options = {});

// A parameter with the values it may draw from.
struct ParamSpec {
  Ident name;
  std::vector<Value> pool;
};

// Fixtures over a fixed database: the relations stay as loaded and each
// parameter is drawn from its pool, deterministically per trial.
FixtureGen fixture_gen_from_db(const Database& db,
                               std::vector<ParamSpec> params, uint64_t seed);

}  // namespace strata

#endif  // STRATA_EQUIV_H_

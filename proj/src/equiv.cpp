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

#include "strata/equiv.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

#include "strata/interp.hpp"

namespace strata {

namespace {

// splitmix64: seed scrambler with good avalanche behavior; the constants are
// the standard ones from the reference implementation.
uint64_t splitmix64(uint64_t* state) {
  uint64_t z = (*state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct RunResult {
  bool ok = false;
  Relation rel;
  std::string error;
};

RunResult run_one(const QueryPtr& q, const Fixture& f) {
  RunResult out;
  try {
    out.rel = eval_query(q, EvalContext(f.db, f.sigma));
    out.ok = true;
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

// Empty when the two runs agree; otherwise a description of the divergence.
std::string divergence(const RunResult& a, const RunResult& b, EqMode mode) {
  if (!a.ok && !b.ok) {
    if (a.error == b.error) return {};
    return "both sides fail, differently: \"" + a.error + "\" vs \"" +
           b.error + "\"";
  }
  if (a.ok != b.ok) {
    return a.ok ? "right side fails: " + b.error
                : "left side fails: " + a.error;
  }
  Relation x = a.rel, y = b.rel;
  if (mode == EqMode::kMultiset) {
    x = sorted_copy(x);
    y = sorted_copy(y);
  }
  if (x.schema != y.schema) {
    return "schemas differ: " + schema_to_string(x.schema) + " vs " +
           schema_to_string(y.schema);
  }
  if (x.rows.size() != y.rows.size()) {
    return "row counts differ: " + std::to_string(x.rows.size()) + " vs " +
           std::to_string(y.rows.size());
  }
  for (size_t i = 0; i < x.rows.size(); ++i) {
    if (!(x.rows[i] == y.rows[i])) {
      return "rows differ at position " + std::to_string(i) + ": " +
             x.rows[i].to_string() + " vs " + y.rows[i].to_string();
    }
  }
  return {};
}

std::string render_fixture(const Fixture& f) {
  std::ostringstream out;
  if (!f.label.empty()) out << f.label << "\n";
  out << "sigma: " << f.sigma.to_string() << "\n";
  for (const auto& [name, rel] : f.db.relations) {
    out << name << ": " << rel.to_string() << "\n";
  }
  return out.str();
}

// Greedy shrink: repeatedly drop any single row whose removal keeps the
// divergence alive.  Bounded so a pathological fixture cannot stall a test
// run.
void shrink_fixture(const QueryPtr& q, const QueryPtr& q2, EqMode mode,
                    Fixture* fix) {
  int budget = 400;
  bool improved = true;
  while (improved && budget > 0) {
    improved = false;
    for (auto& [name, rel] : fix->db.relations) {
      for (size_t i = 0; i < rel.rows.size() && budget > 0; ++i) {
        Fixture cand = *fix;
        auto& rows = cand.db.relations[name].rows;
        rows.erase(rows.begin() + static_cast<ptrdiff_t>(i));
        --budget;
        if (!divergence(run_one(q, cand), run_one(q2, cand), mode).empty()) {
          *fix = std::move(cand);
          improved = true;
          break;
        }
      }
      if (improved) break;
    }
  }
}

}  // namespace

std::string EquivVerdict::to_string() const {
  if (equivalent) {
    return "equivalent (" + std::to_string(trials_run) + " trials)";
  }
  std::ostringstream out;
  out << "not equivalent (trial " << counterexample->trial << "): "
      << counterexample->detail << "\n"
      << render_fixture(counterexample->fixture);
  return out.str();
}

EquivVerdict check_equivalence(const QueryPtr& q, const QueryPtr& q2,
                               const FixtureGen& gen,
                               const EquivOptions& options) {
  EquivVerdict verdict;
  for (size_t trial = 0; trial < options.trials; ++trial) {
    Fixture fix = gen(trial);
    std::string detail =
        divergence(run_one(q, fix), run_one(q2, fix), options.mode);
    ++verdict.trials_run;
    if (detail.empty()) continue;
    if (options.shrink) {
      shrink_fixture(q, q2, options.mode, &fix);
      detail = divergence(run_one(q, fix), run_one(q2, fix), options.mode);
    }
    verdict.equivalent = false;
    verdict.counterexample = Counterexample{std::move(fix), detail, trial};
    break;
  }
  return verdict;
}

FixtureGen fixture_gen_from_db(const Database& db,
                               std::vector<ParamSpec> params, uint64_t seed) {
  return [db, params = std::move(params), seed](size_t trial) {
    uint64_t state = seed ^ (0x100000001b3ULL * (trial + 1));
    Fixture f;
    f.db = db;
    f.label = "trial " + std::to_string(trial);
    for (const auto& p : params) {
      if (p.pool.empty()) {
        throw Error("empty value pool for parameter " + p.name.to_string());
      }
      f.sigma.bind(p.name, p.pool[splitmix64(&state) % p.pool.size()]);
    }
    return f;
  };
}

}  // namespace strata

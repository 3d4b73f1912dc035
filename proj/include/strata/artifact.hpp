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

#ifndef STRATA_ARTIFACT_H_
#define STRATA_ARTIFACT_H_

// The artifact file: a self-contained bundle of everything needed to answer
// a stored query — the layout type, the serialized bytes, the compiled
// reader, the parameter manifest, and the provenance that produced it.
// Running an artifact needs no catalog and no source database.
//
// Envelope: a fixed header (magic "CSTR", format version, section count)
// followed by a section table and the section payloads.  Each table entry
// carries a four-byte tag, the payload's offset and length, and its CRC-32;
// readers verify every checksum before trusting a section.  Writing the
// same plan twice produces byte-identical files.
//
// Sections:
//   LTYP  layout-type descriptor (encode_layout_type)
//   DATA  the serialized layout
//   PLAN  the reader program (encode_ir)
//   MANI  output schema and parameter manifest (names, kinds, scales)
//   PROV  provenance: the stored query's text and the rewrite script that
//         derived it from the user's query (may be empty)

#include <cstdint>
#include <string>
#include <vector>

#include "strata/catalog.hpp"
#include "strata/ir.hpp"
#include "strata/layout_type.hpp"
#include "strata/lower.hpp"
#include "strata/value.hpp"

namespace strata {

inline constexpr char kArtifactMagic[4] = {'C', 'S', 'T', 'R'};
inline constexpr uint16_t kArtifactVersion = 1;

struct Artifact {
  LayoutTypePtr layout_type;
  std::vector<uint8_t> data;
  IRProgram program;
  Schema schema;                        // output columns, in order
  std::vector<Ident> params;            // run-time parameters, manifest order
  std::vector<ColumnDecl> param_decls;  // kind and scale per parameter
  std::string query_text;               // the stored (rewritten) query
  std::string trace_script;             // rewrite steps from the user's query
};

std::vector<uint8_t> encode_artifact(const Artifact& a);
// Throws Error on a bad magic, an unsupported version, a malformed table, a
// checksum mismatch, or a missing section.
Artifact decode_artifact(const std::vector<uint8_t>& bytes);

void write_artifact_file(const std::string& path, const Artifact& a);
Artifact read_artifact_file(const std::string& path);

// Serializes and lowers `q` against `db` and bundles the results.
Artifact build_artifact(const QueryPtr& q, const Database& db,
                        const std::string& trace_script = "");

// Runs the bundled plan.  Parameter values come from `params` by name.
Relation run_artifact(const Artifact& a, const Tuple& params,
                      const RunLimits& limits = {});

}  // namespace strata

#endif  // STRATA_ARTIFACT_H_

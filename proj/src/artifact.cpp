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

#include "strata/artifact.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "strata/ast.hpp"
#include "strata/serialize.hpp"

namespace strata {
namespace {

// --- Little-endian primitives ------------------------------------------------

void put_u16(std::vector<uint8_t>* out, uint16_t v) {
  out->push_back(uint8_t(v));
  out->push_back(uint8_t(v >> 8));
}

void put_u32(std::vector<uint8_t>* out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(uint8_t(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>* out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out->push_back(uint8_t(v >> (8 * i)));
}

void put_str(std::vector<uint8_t>* out, const std::string& s) {
  put_u32(out, uint32_t(s.size()));
  out->insert(out->end(), s.begin(), s.end());
}

struct Cursor {
  const std::vector<uint8_t>* buf;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf->size()) throw Error("artifact is truncated");
  }
  uint16_t u16() {
    need(2);
    uint16_t v = uint16_t((*buf)[pos]) | uint16_t((*buf)[pos + 1]) << 8;
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t((*buf)[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t((*buf)[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  std::string str() {
    uint32_t n = u32();
    need(n);
    std::string s(buf->begin() + pos, buf->begin() + pos + n);
    pos += n;
    return s;
  }
  std::vector<uint8_t> bytes(size_t n) {
    need(n);
    std::vector<uint8_t> v(buf->begin() + pos, buf->begin() + pos + n);
    pos += n;
    return v;
  }
};

uint32_t crc_of(const uint8_t* data, size_t n) {
  uLong c = crc32(0L, Z_NULL, 0);
  return uint32_t(crc32(c, data, uInt(n)));
}

// --- Manifest and provenance payloads ----------------------------------------

void put_ident(std::vector<uint8_t>* out, const Ident& id) {
  out->push_back(id.scope ? 1 : 0);
  if (id.scope) put_str(out, *id.scope);
  put_str(out, id.base);
}

Ident get_ident(Cursor* c) {
  c->need(1);
  bool scoped = (*c->buf)[c->pos++] != 0;
  if (scoped) {
    std::string scope = c->str();
    std::string base = c->str();
    return Ident(scope, base);
  }
  return Ident(c->str());
}

std::vector<uint8_t> encode_manifest(const Artifact& a) {
  std::vector<uint8_t> out;
  put_u32(&out, uint32_t(a.schema.size()));
  for (const Ident& id : a.schema) put_ident(&out, id);
  put_u32(&out, uint32_t(a.params.size()));
  for (size_t i = 0; i < a.params.size(); ++i) {
    put_ident(&out, a.params[i]);
    out.push_back(uint8_t(a.param_decls[i].kind));
    put_u32(&out, uint32_t(a.param_decls[i].scale));
  }
  return out;
}

void decode_manifest(const std::vector<uint8_t>& bytes, Artifact* a) {
  Cursor c{&bytes};
  uint32_t ns = c.u32();
  for (uint32_t i = 0; i < ns; ++i) a->schema.push_back(get_ident(&c));
  uint32_t np = c.u32();
  for (uint32_t i = 0; i < np; ++i) {
    Ident id = get_ident(&c);
    c.need(1);
    auto kind = ValueKind((*c.buf)[c.pos++]);
    int scale = int(c.u32());
    a->params.push_back(id);
    a->param_decls.push_back(ColumnDecl{id.base, kind, scale});
  }
  if (c.pos != bytes.size()) throw Error("manifest has trailing bytes");
}

std::vector<uint8_t> encode_provenance(const Artifact& a) {
  std::vector<uint8_t> out;
  put_str(&out, a.query_text);
  put_str(&out, a.trace_script);
  return out;
}

void decode_provenance(const std::vector<uint8_t>& bytes, Artifact* a) {
  Cursor c{&bytes};
  a->query_text = c.str();
  a->trace_script = c.str();
  if (c.pos != bytes.size()) throw Error("provenance has trailing bytes");
}

}  // namespace

// --- Envelope ----------------------------------------------------------------

std::vector<uint8_t> encode_artifact(const Artifact& a) {
  struct Section {
    const char* tag;
    std::vector<uint8_t> payload;
  };
  std::vector<Section> sections;
  sections.push_back({"LTYP", encode_layout_type(a.layout_type)});
  sections.push_back({"DATA", a.data});
  sections.push_back({"PLAN", encode_ir(a.program)});
  sections.push_back({"MANI", encode_manifest(a)});
  sections.push_back({"PROV", encode_provenance(a)});

  std::vector<uint8_t> out;
  out.insert(out.end(), kArtifactMagic, kArtifactMagic + 4);
  put_u16(&out, kArtifactVersion);
  put_u16(&out, uint16_t(sections.size()));

  // Table entry: tag(4) offset(8) length(8) crc(4).
  size_t table_at = out.size();
  size_t entry_size = 4 + 8 + 8 + 4;
  out.resize(out.size() + sections.size() * entry_size);

  for (size_t i = 0; i < sections.size(); ++i) {
    uint64_t off = out.size();
    out.insert(out.end(), sections[i].payload.begin(),
               sections[i].payload.end());
    std::vector<uint8_t> entry;
    entry.insert(entry.end(), sections[i].tag, sections[i].tag + 4);
    put_u64(&entry, off);
    put_u64(&entry, sections[i].payload.size());
    put_u32(&entry,
            crc_of(sections[i].payload.data(), sections[i].payload.size()));
    std::memcpy(out.data() + table_at + i * entry_size, entry.data(),
                entry_size);
  }
  return out;
}

Artifact decode_artifact(const std::vector<uint8_t>& bytes) {
  Cursor c{&bytes};
  c.need(4);
  if (std::memcmp(bytes.data(), kArtifactMagic, 4) != 0) {
    throw Error("not an artifact file (bad magic)");
  }
  c.pos = 4;
  uint16_t version = c.u16();
  if (version != kArtifactVersion) {
    throw Error("unsupported artifact version " + std::to_string(version));
  }
  uint16_t count = c.u16();

  std::map<std::string, std::vector<uint8_t>> payloads;
  for (uint16_t i = 0; i < count; ++i) {
    c.need(4);
    std::string tag(bytes.begin() + c.pos, bytes.begin() + c.pos + 4);
    c.pos += 4;
    uint64_t off = c.u64();
    uint64_t len = c.u64();
    uint32_t crc = c.u32();
    if (off + len > bytes.size() || off + len < off) {
      throw Error("artifact section " + tag + " is out of bounds");
    }
    std::vector<uint8_t> payload(bytes.begin() + off,
                                 bytes.begin() + off + len);
    if (crc_of(payload.data(), payload.size()) != crc) {
      throw Error("artifact section " + tag + " fails its checksum");
    }
    payloads[tag] = std::move(payload);
  }

  for (const char* tag : {"LTYP", "DATA", "PLAN", "MANI", "PROV"}) {
    if (!payloads.count(tag)) {
      throw Error(std::string("artifact is missing section ") + tag);
    }
  }

  Artifact a;
  a.layout_type = decode_layout_type(payloads["LTYP"]);
  a.data = std::move(payloads["DATA"]);
  a.program = decode_ir(payloads["PLAN"]);
  decode_manifest(payloads["MANI"], &a);
  decode_provenance(payloads["PROV"], &a);
  return a;
}

void write_artifact_file(const std::string& path, const Artifact& a) {
  std::vector<uint8_t> bytes = encode_artifact(a);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            std::streamsize(bytes.size()));
  if (!out) throw Error("failed writing " + path);
}

Artifact read_artifact_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return decode_artifact(bytes);
}

Artifact build_artifact(const QueryPtr& q, const Database& db,
                        const std::string& trace_script) {
  TypedLayout typed = infer_type(q, db);
  SerializedLayout s = serialize(q, db, typed);
  LoweredPlan plan = lower(q, db.catalog, typed);
  Artifact a;
  a.layout_type = typed.root;
  a.data = std::move(s.bytes);
  a.program = std::move(plan.program);
  a.schema = std::move(plan.schema);
  a.params = std::move(plan.params);
  a.param_decls = std::move(plan.param_decls);
  a.query_text = print_query(q);
  a.trace_script = trace_script;
  return a;
}

Relation run_artifact(const Artifact& a, const Tuple& params,
                      const RunLimits& limits) {
  LoweredPlan plan{a.program, a.schema, a.params, a.param_decls};
  return run_plan(plan, a.data, params, limits);
}

}  // namespace strata

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

#include "strata/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace strata {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::vector<std::string> split_words(const std::string& line) {
  std::vector<std::string> words;
  std::istringstream in(line);
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

ColumnDecl parse_column_type(std::string name, const std::string& type) {
  ColumnDecl col;
  col.name = std::move(name);
  if (type == "int") {
    col.kind = ValueKind::kInt;
  } else if (type == "string") {
    col.kind = ValueKind::kString;
  } else if (type == "bool") {
    col.kind = ValueKind::kBool;
  } else if (type == "date") {
    col.kind = ValueKind::kDate;
  } else if (type.rfind("fixed(", 0) == 0 && type.back() == ')') {
    col.kind = ValueKind::kFixed;
    std::string digits = type.substr(6, type.size() - 7);
    if (digits.empty() ||
        digits.find_first_not_of("0123456789") != std::string::npos) {
      throw Error("bad fixed-point scale: " + type);
    }
    col.scale = std::stoi(digits);
    if (col.scale > 9) throw Error("fixed-point scale above 9: " + type);
  } else {
    throw Error("unknown column type: " + type);
  }
  return col;
}

// Parses one CSV field value according to the declared column type.
Value parse_field(const std::string& text, bool quoted, const ColumnDecl& col,
                  size_t record) {
  if (!quoted && text.empty()) return Value::null();
  auto bad = [&](const std::string& what) -> Error {
    return Error("record " + std::to_string(record) + ", column '" + col.name +
                 "': " + what + ": '" + text + "'");
  };
  try {
    switch (col.kind) {
      case ValueKind::kInt: {
        size_t used = 0;
        int64_t v = std::stoll(text, &used);
        if (used != text.size()) throw bad("bad integer");
        return Value::integer(v);
      }
      case ValueKind::kBool:
        if (text == "true" || text == "1") return Value::boolean(true);
        if (text == "false" || text == "0") return Value::boolean(false);
        throw bad("bad boolean");
      case ValueKind::kString: return Value::string(text);
      case ValueKind::kDate: return Value::date_from_iso(text);
      case ValueKind::kFixed: {
        // Accept "12.3", "12", "-0.07"; excess decimals are an error.
        bool neg = !text.empty() && text[0] == '-';
        std::string body = neg ? text.substr(1) : text;
        size_t dot = body.find('.');
        std::string digits =
            dot == std::string::npos ? body
                                     : body.substr(0, dot) + body.substr(dot + 1);
        int frac = dot == std::string::npos ? 0 : int(body.size() - dot - 1);
        if (digits.empty() ||
            digits.find_first_not_of("0123456789") != std::string::npos ||
            frac > col.scale) {
          throw bad("bad fixed-point value");
        }
        int64_t num = std::stoll(digits);
        for (int i = frac; i < col.scale; ++i) num *= 10;
        return Value::fixed(neg ? -num : num, col.scale);
      }
      case ValueKind::kNull: break;
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw bad("unparseable value");
  }
  throw bad("unsupported column type");
}

struct CsvField {
  std::string text;
  bool quoted = false;
};

// RFC 4180 records: fields separated by commas, records by CRLF or LF,
// quotes escaped by doubling inside quoted fields.
std::vector<std::vector<CsvField>> parse_csv_records(const std::string& text) {
  std::vector<std::vector<CsvField>> records;
  std::vector<CsvField> record;
  CsvField field;
  size_t i = 0;
  bool any = false;  // field content seen since last separator
  auto end_field = [&] {
    record.push_back(std::move(field));
    field = CsvField{};
    any = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == '"' && !any) {
      field.quoted = true;
      any = true;
      ++i;
      while (true) {
        if (i >= text.size()) throw Error("unterminated quoted CSV field");
        if (text[i] == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            field.text += '"';
            i += 2;
          } else {
            ++i;
            break;
          }
        } else {
          field.text += text[i++];
        }
      }
      continue;
    }
    if (c == ',') {
      end_field();
      ++i;
      continue;
    }
    if (c == '\n' || (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n')) {
      end_record();
      i += c == '\r' ? 2 : 1;
      continue;
    }
    field.text += c;
    any = true;
    ++i;
  }
  // Final record without trailing newline.
  if (any || field.quoted || !record.empty()) end_record();
  return records;
}

std::string csv_escape(const std::string& s, bool force_quotes) {
  bool need = force_quotes || s.find_first_of(",\"\r\n") != std::string::npos;
  if (!need) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

const ColumnDecl* RelationDecl::find_column(const std::string& col) const {
  for (const auto& c : columns) {
    if (c.name == col) return &c;
  }
  return nullptr;
}

const RelationDecl* Catalog::find(const std::string& name) const {
  for (const auto& r : relations) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const RelationDecl& Catalog::require(const std::string& name) const {
  const RelationDecl* r = find(name);
  if (!r) throw Error("unknown relation: " + name);
  return *r;
}

Catalog parse_catalog(const std::string& text, const std::string& base_dir) {
  Catalog cat;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> words = split_words(line);
    if (words.empty() || words[0][0] == '#') continue;
    auto fail = [&](const std::string& msg) -> Error {
      return Error("catalog line " + std::to_string(lineno) + ": " + msg);
    };
    if (words[0] == "relation") {
      if (words.size() != 3) throw fail("expected: relation <name> <csv-path>");
      if (cat.find(words[1])) throw fail("duplicate relation " + words[1]);
      RelationDecl decl;
      decl.name = words[1];
      std::filesystem::path p(words[2]);
      decl.csv_path = p.is_absolute() || base_dir.empty()
                          ? p.string()
                          : (std::filesystem::path(base_dir) / p).string();
      cat.relations.push_back(std::move(decl));
    } else if (words[0] == "col") {
      if (cat.relations.empty()) throw fail("col before any relation");
      if (words.size() != 3) throw fail("expected: col <name> <type>");
      RelationDecl& decl = cat.relations.back();
      if (decl.find_column(words[1])) {
        throw fail("duplicate column " + words[1]);
      }
      decl.columns.push_back(parse_column_type(words[1], words[2]));
    } else {
      throw fail("expected 'relation' or 'col', got '" + words[0] + "'");
    }
  }
  for (const auto& r : cat.relations) {
    if (r.columns.empty()) {
      throw Error("relation " + r.name + " declares no columns");
    }
  }
  return cat;
}

Catalog parse_catalog_file(const std::string& path) {
  std::string dir = std::filesystem::path(path).parent_path().string();
  return parse_catalog(read_file(path), dir);
}

const Relation& Database::require(const std::string& name) const {
  auto it = relations.find(name);
  if (it == relations.end()) throw Error("no data for relation: " + name);
  return it->second;
}

Relation parse_csv(const std::string& text, const RelationDecl& decl) {
  std::vector<std::vector<CsvField>> records = parse_csv_records(text);
  if (records.empty()) throw Error("csv for " + decl.name + " has no header");
  const std::vector<CsvField>& header = records[0];
  if (header.size() != decl.columns.size()) {
    throw Error("csv for " + decl.name + ": header has " +
                std::to_string(header.size()) + " fields, expected " +
                std::to_string(decl.columns.size()));
  }
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i].text != decl.columns[i].name) {
      throw Error("csv for " + decl.name + ": header field '" +
                  header[i].text + "' does not match column '" +
                  decl.columns[i].name + "'");
    }
  }
  Relation rel;
  for (const auto& col : decl.columns) rel.schema.push_back(Ident(col.name));
  for (size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != decl.columns.size()) {
      throw Error("csv for " + decl.name + ": record " + std::to_string(r) +
                  " has " + std::to_string(rec.size()) + " fields, expected " +
                  std::to_string(decl.columns.size()));
    }
    Tuple row;
    for (size_t c = 0; c < rec.size(); ++c) {
      row.bind(Ident(decl.columns[c].name),
               parse_field(rec[c].text, rec[c].quoted, decl.columns[c], r));
    }
    rel.rows.push_back(std::move(row));
  }
  return rel;
}

Database load_database(const Catalog& catalog) {
  Database db;
  db.catalog = catalog;
  for (const auto& decl : catalog.relations) {
    db.relations.emplace(decl.name, parse_csv(read_file(decl.csv_path), decl));
  }
  return db;
}

Database load_database_file(const std::string& catalog_path) {
  return load_database(parse_catalog_file(catalog_path));
}

Database sample_database(const Database& db, size_t max_rows) {
  Database out;
  out.catalog = db.catalog;
  for (const auto& [name, rel] : db.relations) {
    Relation r;
    r.schema = rel.schema;
    size_t n = std::min(rel.rows.size(), max_rows);
    r.rows.assign(rel.rows.begin(), rel.rows.begin() + n);
    out.relations.emplace(name, std::move(r));
  }
  return out;
}

std::string to_csv(const Relation& rel) {
  std::ostringstream out;
  for (size_t i = 0; i < rel.schema.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(rel.schema[i].to_string(), false);
  }
  out << '\n';
  for (const auto& row : rel.rows) {
    for (size_t i = 0; i < row.fields().size(); ++i) {
      if (i) out << ',';
      const Value& v = row.fields()[i].second;
      switch (v.kind()) {
        case ValueKind::kNull: break;  // empty unquoted field
        case ValueKind::kString: out << csv_escape(v.as_string(), v.as_string().empty()); break;
        case ValueKind::kBool: out << (v.as_bool() ? "true" : "false"); break;
        case ValueKind::kInt: out << v.as_int(); break;
        case ValueKind::kDate: out << v.date_to_iso(); break;
        case ValueKind::kFixed: {
          std::string t = v.to_text();
          if (!t.empty() && t.back() == '.') t.pop_back();
          out << t;
          break;
        }
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace strata

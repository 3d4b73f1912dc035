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

#ifndef STRATA_CATALOG_H_
#define STRATA_CATALOG_H_

// Relation metadata and CSV-backed data loading.
//
// A catalog file lists the relations a query may mention, their column
// types, and where to find their data:
//
//   relation logs logs.csv
//     col counter int
//     col succ int
//     col id string
//
// Column types are int, string, bool, fixed(<scale>), and date.  Data files
// are CSV with a header row; an empty unquoted field reads as null while a
// quoted empty string reads as "".

#include <map>
#include <string>
#include <vector>

#include "strata/value.hpp"

namespace strata {

struct ColumnDecl {
  std::string name;
  ValueKind kind = ValueKind::kInt;
  int scale = 0;  // meaningful only for kFixed
};

struct RelationDecl {
  std::string name;
  std::string csv_path;  // relative paths resolve against the catalog file
  std::vector<ColumnDecl> columns;

  const ColumnDecl* find_column(const std::string& col) const;
};

struct Catalog {
  std::vector<RelationDecl> relations;

  const RelationDecl* find(const std::string& name) const;
  const RelationDecl& require(const std::string& name) const;
};

// Parses catalog text.  `base_dir` is prepended to relative csv paths.
Catalog parse_catalog(const std::string& text, const std::string& base_dir);
Catalog parse_catalog_file(const std::string& path);

// A catalog together with loaded rows.
struct Database {
  Catalog catalog;
  std::map<std::string, Relation> relations;

  const Relation& require(const std::string& name) const;
};

// Parses one CSV document against a relation declaration.  The first record
// must be a header matching the declared column names in order.
Relation parse_csv(const std::string& text, const RelationDecl& decl);

// Loads every relation in the catalog from its csv file.
Database load_database(const Catalog& catalog);
Database load_database_file(const std::string& catalog_path);

// A copy of `db` with every relation truncated to its first `max_rows` rows,
// preserving order.  Cost estimation and exploratory type inference sample
// with this so repeated runs see the same prefix.
Database sample_database(const Database& db, size_t max_rows);

// Formats rows as CSV (header + records), inverse of parse_csv.
std::string to_csv(const Relation& rel);

}  // namespace strata

#endif  // STRATA_CATALOG_H_

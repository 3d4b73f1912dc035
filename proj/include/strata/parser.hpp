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

#ifndef STRATA_PARSER_H_
#define STRATA_PARSER_H_

#include <string>
#include <string_view>

#include "strata/ast.hpp"

namespace strata {

class SyntaxError : public Error {
 public:
  SyntaxError(int line, int col, const std::string& msg)
      : Error("syntax error at " + std::to_string(line) + ":" +
              std::to_string(col) + ": " + msg),
        line(line),
        col(col) {}
  int line;
  int col;
};

// Parses the concrete query syntax (see docs/query-language.md).  The result
// is checked for scope shadowing; name resolution is a separate pass.
// Throws SyntaxError with a line/column position on malformed input.
QueryPtr parse_query(std::string_view text);

// Parses a standalone scalar expression.
ExprPtr parse_expr(std::string_view text);

// Verifies that no root-to-leaf path binds the same scope twice.
// Throws Error naming the offending scope.
void check_scopes(const QueryPtr& q);

bool is_reserved_word(std::string_view word);

}  // namespace strata

#endif  // STRATA_PARSER_H_

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

#include "strata/parser.hpp"

#include <cctype>
#include <set>
#include <vector>

namespace strata {

namespace {

const std::set<std::string, std::less<>> kReserved = {
    "select", "filter", "join", "groupby", "orderby", "dedup", "depjoin",
    "ascalar", "atuple", "alist", "ahashidx", "aorderedidx", "empty",
    "relation", "as", "asc", "desc", "cross", "concat", "true", "false",
    "null", "not", "and", "or", "if", "then", "else", "exists", "first",
    "count", "sum", "min", "max", "avg", "date"};

struct Token {
  enum Type { kIdent, kParam, kInt, kDecimal, kString, kSym, kEof };
  Type type;
  std::string text;  // ident name, param (with '$'), literal text, or symbol
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { lex(); }
  std::vector<Token> tokens;

 private:
  [[noreturn]] void fail(const std::string& msg) {
    throw SyntaxError(line_, col_, msg);
  }

  char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }
  char peek2() const { return pos_ + 1 < src_.size() ? src_[pos_ + 1] : '\0'; }
  char advance() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void push(Token::Type t, std::string text, int line, int col) {
    tokens.push_back(Token{t, std::move(text), line, col});
  }

  void lex() {
    while (pos_ < src_.size()) {
      char c = peek();
      int line = line_, col = col_;
      if (std::isspace(unsigned(c))) {
        advance();
        continue;
      }
      if (c == '#') {  // line comment
        while (pos_ < src_.size() && peek() != '\n') advance();
        continue;
      }
      if (std::isalpha(unsigned(c)) || c == '_') {
        std::string word;
        while (pos_ < src_.size() &&
               (std::isalnum(unsigned(peek())) || peek() == '_')) {
          word += advance();
        }
        push(Token::kIdent, std::move(word), line, col);
        continue;
      }
      if (c == '$') {
        advance();
        if (!(std::isalpha(unsigned(peek())) || peek() == '_')) {
          fail("expected identifier after '$'");
        }
        std::string word = "$";
        while (pos_ < src_.size() &&
               (std::isalnum(unsigned(peek())) || peek() == '_')) {
          word += advance();
        }
        push(Token::kParam, std::move(word), line, col);
        continue;
      }
      if (std::isdigit(unsigned(c))) {
        std::string num;
        bool decimal = false;
        while (pos_ < src_.size() && std::isdigit(unsigned(peek()))) {
          num += advance();
        }
        // A '.' starts a decimal only when not followed by an identifier
        // (there is no field access on numbers, so this is unambiguous).
        if (peek() == '.' && !std::isalpha(unsigned(peek2())) &&
            peek2() != '_') {
          decimal = true;
          num += advance();
          while (pos_ < src_.size() && std::isdigit(unsigned(peek()))) {
            num += advance();
          }
        }
        push(decimal ? Token::kDecimal : Token::kInt, std::move(num), line,
             col);
        continue;
      }
      if (c == '"') {
        advance();
        std::string s;
        while (true) {
          if (pos_ >= src_.size()) fail("unterminated string literal");
          char d = advance();
          if (d == '"') break;
          if (d == '\\') {
            if (pos_ >= src_.size()) fail("unterminated escape");
            char e = advance();
            switch (e) {
              case '"': s += '"'; break;
              case '\\': s += '\\'; break;
              case 'n': s += '\n'; break;
              case 't': s += '\t'; break;
              case 'r': s += '\r'; break;
              default: fail(std::string("unknown escape '\\") + e + "'");
            }
          } else {
            s += d;
          }
        }
        push(Token::kString, std::move(s), line, col);
        continue;
      }
      // Symbols; two-character forms first.
      std::string two;
      two += c;
      two += peek2();
      if (two == "&&" || two == "||" || two == "<=" || two == ">=") {
        advance();
        advance();
        push(Token::kSym, two, line, col);
        continue;
      }
      static const std::string kSingles = "()[]{},;.=<>+-*/%";
      if (kSingles.find(c) != std::string::npos) {
        advance();
        push(Token::kSym, std::string(1, c), line, col);
        continue;
      }
      fail(std::string("unexpected character '") + c + "'");
    }
    push(Token::kEof, "", line_, col_);
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lx_(src) {}

  QueryPtr parse_query_all() {
    QueryPtr q = query();
    expect_eof();
    return q;
  }
  ExprPtr parse_expr_all() {
    ExprPtr e = expr();
    expect_eof();
    return e;
  }

 private:
  const Token& cur() const { return lx_.tokens[pos_]; }
  const Token& next() { return lx_.tokens[pos_++]; }
  bool at_sym(std::string_view s) const {
    return cur().type == Token::kSym && cur().text == s;
  }
  bool at_word(std::string_view w) const {
    return cur().type == Token::kIdent && cur().text == w;
  }
  bool eat_sym(std::string_view s) {
    if (!at_sym(s)) return false;
    ++pos_;
    return true;
  }
  bool eat_word(std::string_view w) {
    if (!at_word(w)) return false;
    ++pos_;
    return true;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw SyntaxError(cur().line, cur().col, msg + " (got '" +
                      (cur().type == Token::kEof ? "<eof>" : cur().text) +
                      "')");
  }
  void require_sym(std::string_view s) {
    if (!eat_sym(s)) fail("expected '" + std::string(s) + "'");
  }
  void require_word(std::string_view w) {
    if (!eat_word(w)) fail("expected '" + std::string(w) + "'");
  }
  void expect_eof() {
    if (cur().type != Token::kEof) fail("expected end of input");
  }

  std::string plain_ident() {
    if (cur().type != Token::kIdent) fail("expected identifier");
    if (kReserved.count(cur().text)) {
      fail("'" + cur().text + "' is a reserved word");
    }
    return next().text;
  }

  // --- queries ---------------------------------------------------------------

  QueryPtr query() {
    if (cur().type != Token::kIdent) fail("expected a query");
    const std::string& w = cur().text;
    if (w == "relation") {
      ++pos_;
      require_sym("(");
      std::string name = plain_ident();
      require_sym(")");
      return q_relation(name);
    }
    if (w == "dedup") {
      ++pos_;
      require_sym("(");
      QueryPtr q = query();
      require_sym(")");
      return q_dedup(q);
    }
    if (w == "select" || w == "groupby") {
      bool grouping = w == "groupby";
      ++pos_;
      require_sym("(");
      std::vector<NamedExpr> items = named_list();
      require_sym(",");
      std::vector<Ident> keys;
      if (grouping) {
        require_sym("[");
        if (!at_sym("]")) {
          keys.push_back(name_ident());
          while (eat_sym(",")) keys.push_back(name_ident());
        }
        require_sym("]");
        require_sym(",");
      }
      QueryPtr q = query();
      require_sym(")");
      return grouping ? q_groupby(std::move(items), std::move(keys), q)
                      : q_select(std::move(items), q);
    }
    if (w == "filter") {
      ++pos_;
      require_sym("(");
      ExprPtr p = expr();
      require_sym(",");
      QueryPtr q = query();
      require_sym(")");
      return q_filter(p, q);
    }
    if (w == "join") {
      ++pos_;
      require_sym("(");
      ExprPtr p = expr();
      require_sym(",");
      QueryPtr a = query();
      require_sym(",");
      QueryPtr b = query();
      require_sym(")");
      return q_join(p, a, b);
    }
    if (w == "orderby") {
      ++pos_;
      require_sym("(");
      require_sym("[");
      std::vector<SortKey> keys;
      if (!at_sym("]")) {
        keys.push_back(sort_key());
        while (eat_sym(",")) keys.push_back(sort_key());
      }
      require_sym("]");
      require_sym(",");
      QueryPtr q = query();
      require_sym(")");
      return q_orderby(std::move(keys), q);
    }
    if (w == "depjoin" || w == "alist") {
      bool dep = w == "depjoin";
      ++pos_;
      require_sym("(");
      QueryPtr a = query();
      require_word("as");
      std::string scope = plain_ident();
      require_sym(",");
      QueryPtr b = query();
      require_sym(")");
      return dep ? q_depjoin(a, scope, b) : q_alist(a, scope, b);
    }
    if (w == "ascalar") {
      ++pos_;
      require_sym("(");
      NamedExpr item = named_item();
      require_sym(")");
      return q_ascalar(std::move(item));
    }
    if (w == "atuple") {
      ++pos_;
      require_sym("(");
      require_sym("[");
      std::vector<QueryPtr> qs;
      if (!at_sym("]")) {
        qs.push_back(query());
        while (eat_sym(",")) qs.push_back(query());
      }
      require_sym("]");
      require_sym(";");
      TupleKind k;
      if (eat_word("cross")) {
        k = TupleKind::kCross;
      } else if (eat_word("concat")) {
        k = TupleKind::kConcat;
      } else {
        fail("expected 'cross' or 'concat'");
      }
      require_sym(")");
      return q_atuple(std::move(qs), k);
    }
    if (w == "ahashidx") {
      ++pos_;
      require_sym("(");
      QueryPtr a = query();
      require_word("as");
      std::string scope = plain_ident();
      require_sym(",");
      QueryPtr b = query();
      require_sym(",");
      std::vector<ExprPtr> keys = expr_group();
      require_sym(")");
      return q_ahashidx(a, scope, b, std::move(keys));
    }
    if (w == "aorderedidx") {
      ++pos_;
      require_sym("(");
      QueryPtr a = query();
      require_word("as");
      std::string scope = plain_ident();
      require_sym(",");
      QueryPtr b = query();
      require_sym(",");
      std::vector<ExprPtr> lo = expr_group();
      require_sym(",");
      std::vector<ExprPtr> hi = expr_group();
      require_sym(")");
      return q_aorderedidx(a, scope, b, std::move(lo), std::move(hi));
    }
    if (w == "empty") {
      ++pos_;
      return q_empty();
    }
    if (kReserved.count(w)) fail("unexpected keyword '" + w + "'");
    // Bare identifier: shorthand for relation(name).
    ++pos_;
    return q_relation(w);
  }

  SortKey sort_key() {
    SortKey k;
    k.expr = expr();
    if (eat_word("desc")) {
      k.dir = SortDir::kDesc;
    } else {
      eat_word("asc");
      k.dir = SortDir::kAsc;
    }
    return k;
  }

  std::vector<NamedExpr> named_list() {
    require_sym("{");
    std::vector<NamedExpr> items;
    items.push_back(named_item());
    while (eat_sym(",")) items.push_back(named_item());
    require_sym("}");
    return items;
  }

  NamedExpr named_item() {
    ExprPtr e = expr();
    if (eat_word("as")) {
      return NamedExpr{plain_ident(), e};
    }
    if (e->kind != ScalarExpr::Kind::kName) {
      fail("expression needs a name: add 'as <ident>'");
    }
    return NamedExpr{e->name.base, e};
  }

  // A single expression, or a parenthesized comma-list of two or more.
  std::vector<ExprPtr> expr_group() {
    if (at_sym("(")) {
      size_t save = pos_;
      ++pos_;
      std::vector<ExprPtr> es;
      try {
        es.push_back(expr());
        if (at_sym(",")) {
          while (eat_sym(",")) es.push_back(expr());
          require_sym(")");
          return es;
        }
      } catch (const SyntaxError&) {
        // fall through to plain-expression parse
      }
      pos_ = save;  // "(e)" or "(e op ...": a parenthesized expression
    }
    return {expr()};
  }

  // --- expressions -----------------------------------------------------------

  Ident name_ident() {
    if (cur().type == Token::kParam) return Ident(next().text);
    std::string first = plain_ident();
    if (eat_sym(".")) {
      return Ident(first, plain_ident());
    }
    return Ident(first);
  }

  ExprPtr expr() { return expr_if(); }

  ExprPtr expr_if() {
    if (eat_word("if")) {
      ExprPtr c = expr_or();
      require_word("then");
      ExprPtr t = expr_or();
      require_word("else");
      ExprPtr f = expr_if();
      return e_if(c, t, f);
    }
    return expr_or();
  }

  ExprPtr expr_or() {
    ExprPtr e = expr_and();
    while (at_sym("||") || at_word("or")) {
      ++pos_;
      e = e_or(e, expr_and());
    }
    return e;
  }

  ExprPtr expr_and() {
    ExprPtr e = expr_not();
    while (at_sym("&&") || at_word("and")) {
      ++pos_;
      e = e_and(e, expr_not());
    }
    return e;
  }

  ExprPtr expr_not() {
    if (eat_word("not")) return e_not(expr_cmp());
    return expr_cmp();
  }

  ExprPtr expr_cmp() {
    ExprPtr e = expr_add();
    BinOp op;
    if (at_sym("=")) {
      op = BinOp::kEq;
    } else if (at_sym("<")) {
      op = BinOp::kLt;
    } else if (at_sym("<=")) {
      op = BinOp::kLe;
    } else if (at_sym(">")) {
      op = BinOp::kGt;
    } else if (at_sym(">=")) {
      op = BinOp::kGe;
    } else {
      return e;
    }
    ++pos_;
    return e_binop(op, e, expr_add());
  }

  ExprPtr expr_add() {
    ExprPtr e = expr_mul();
    while (at_sym("+") || at_sym("-")) {
      BinOp op = at_sym("+") ? BinOp::kAdd : BinOp::kSub;
      ++pos_;
      e = e_binop(op, e, expr_mul());
    }
    return e;
  }

  ExprPtr expr_mul() {
    ExprPtr e = expr_unary();
    while (at_sym("*") || at_sym("/") || at_sym("%")) {
      BinOp op = at_sym("*") ? BinOp::kMul
                 : at_sym("/") ? BinOp::kDiv
                               : BinOp::kMod;
      ++pos_;
      e = e_binop(op, e, expr_unary());
    }
    return e;
  }

  ExprPtr expr_unary() {
    if (at_sym("-")) {
      ++pos_;
      if (cur().type == Token::kInt || cur().type == Token::kDecimal) {
        return number_literal(true);
      }
      return e_binop(BinOp::kSub, e_int(0), expr_unary());
    }
    return expr_primary();
  }

  ExprPtr number_literal(bool negate) {
    const Token& t = next();
    if (t.type == Token::kInt) {
      int64_t v = std::stoll(t.text);
      return e_int(negate ? -v : v);
    }
    // Decimal literal: numerator from the digits, scale from the fraction.
    size_t dot = t.text.find('.');
    std::string digits = t.text.substr(0, dot) + t.text.substr(dot + 1);
    int scale = int(t.text.size() - dot - 1);
    if (scale > 9) {
      throw SyntaxError(t.line, t.col, "fixed-point literals support at most 9 decimal places");
    }
    int64_t num = digits.empty() ? 0 : std::stoll(digits);
    return e_const(Value::fixed(negate ? -num : num, scale));
  }

  ExprPtr expr_primary() {
    switch (cur().type) {
      case Token::kInt:
      case Token::kDecimal: return number_literal(false);
      case Token::kString: return e_str(next().text);
      case Token::kParam: return e_name(Ident(next().text));
      case Token::kSym:
        if (eat_sym("(")) {
          ExprPtr e = expr();
          require_sym(")");
          return e;
        }
        fail("expected an expression");
      case Token::kIdent: break;
      case Token::kEof: fail("expected an expression");
    }
    const std::string& w = cur().text;
    if (w == "true") {
      ++pos_;
      return e_bool(true);
    }
    if (w == "false") {
      ++pos_;
      return e_bool(false);
    }
    if (w == "null") {
      ++pos_;
      return e_const(Value::null());
    }
    if (w == "date") {
      ++pos_;
      require_sym("(");
      if (cur().type != Token::kString) fail("expected a date string");
      Value v = Value::date_from_iso(next().text);
      require_sym(")");
      return e_const(v);
    }
    if (w == "count") {
      ++pos_;
      require_sym("(");
      require_sym(")");
      return e_count();
    }
    if (w == "sum" || w == "min" || w == "max" || w == "avg") {
      std::string agg = next().text;
      require_sym("(");
      ExprPtr e = expr();
      require_sym(")");
      if (agg == "sum") return e_sum(e);
      if (agg == "min") return e_min(e);
      if (agg == "max") return e_max(e);
      return e_avg(e);
    }
    if (w == "exists" || w == "first") {
      bool ex = w == "exists";
      ++pos_;
      require_sym("(");
      QueryPtr q = query();
      require_sym(")");
      return ex ? e_exists(q) : e_first(q);
    }
    return e_name(name_ident());
  }

  Lexer lx_;
  size_t pos_ = 0;
};

void check_scopes_walk(const QueryPtr& q, std::vector<std::string>* active) {
  auto walk_exprs = [&](const QueryExpr& node) {
    std::vector<ExprPtr> es;
    collect_node_exprs(node, &es);
    for (const auto& e : es) {
      std::vector<QueryPtr> subs;
      collect_expr_subqueries(e, &subs);
      for (const auto& s : subs) check_scopes_walk(s, active);
    }
  };
  walk_exprs(*q);
  if (q->binds_scope()) {
    for (const auto& s : *active) {
      if (s == q->scope) {
        throw Error("scope '" + q->scope + "' is shadowed");
      }
    }
    check_scopes_walk(q->children[0], active);
    active->push_back(q->scope);
    check_scopes_walk(q->children[1], active);
    active->pop_back();
    return;
  }
  for (const auto& c : q->children) check_scopes_walk(c, active);
}

}  // namespace

bool is_reserved_word(std::string_view word) {
  return kReserved.count(word) > 0;
}

QueryPtr parse_query(std::string_view text) {
  Parser p(text);
  QueryPtr q = p.parse_query_all();
  check_scopes(q);
  return q;
}

ExprPtr parse_expr(std::string_view text) {
  Parser p(text);
  return p.parse_expr_all();
}

void check_scopes(const QueryPtr& q) {
  std::vector<std::string> active;
  check_scopes_walk(q, &active);
}

}  // namespace strata

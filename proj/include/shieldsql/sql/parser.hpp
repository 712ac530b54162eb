#pragma once

// Recursive-descent parser for single SELECT-form statements. Anything else
// (INSERT/UPDATE/DDL/...) is rejected as unsupported; the executor and every
// analysis pass downstream rely on this read-only guarantee.

#include <memory>
#include <string>
#include <vector>

#include "shieldsql/sql/ast.hpp"
#include "shieldsql/sql/lexer.hpp"

namespace shieldsql::sql {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {
    tokens_ = Lexer(text).tokenize();
  }

  SelectPtr parse_statement() {
    if (cur().kind == TokenKind::End) throw SqlSyntaxError("empty statement", 0);
    if (is_write_statement_start())
      throw UnsupportedStatementError("unsupported statement type: " + to_lower(cur().text) +
                                      " (only SELECT-form queries are accepted)");
    if (!is_select_start()) throw SqlSyntaxError("expected SELECT", cur().offset);
    auto stmt = parse_select();
    if (cur().is_punct(";")) advance();
    if (cur().kind != TokenKind::End)
      throw SqlSyntaxError("trailing input after statement", cur().offset);
    return stmt;
  }

 private:
  std::string_view text_;
  std::vector<Token> tokens_;
  size_t idx_ = 0;

  const Token& cur() const { return tokens_[idx_]; }
  const Token& peek(size_t n = 1) const {
    return tokens_[std::min(idx_ + n, tokens_.size() - 1)];
  }
  void advance() {
    if (idx_ + 1 < tokens_.size()) ++idx_;
  }

  bool is_select_start() const { return cur().is_keyword("SELECT"); }

  bool is_write_statement_start() const {
    static const char* kws[] = {"INSERT", "UPDATE", "DELETE", "DROP",    "CREATE", "ALTER",
                                "PRAGMA", "ATTACH", "DETACH", "REPLACE", "VACUUM", "BEGIN",
                                "COMMIT", "ROLLBACK", "WITH", "REINDEX", "ANALYZE", "EXPLAIN"};
    for (const char* k : kws)
      if (cur().is_keyword(k)) return true;
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw SqlSyntaxError(msg, cur().offset);
  }

  bool accept_kw(std::string_view kw) {
    if (cur().is_keyword(kw)) {
      advance();
      return true;
    }
    return false;
  }

  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) fail(std::string("expected ") + std::string(kw));
  }

  bool accept_punct(std::string_view p) {
    if (cur().is_punct(p)) {
      advance();
      return true;
    }
    return false;
  }

  void expect_punct(std::string_view p) {
    if (!accept_punct(p)) fail(std::string("expected '") + std::string(p) + "'");
  }

  // Reserved words that terminate identifier positions.
  static bool reserved(const Token& t) {
    static const char* kws[] = {"SELECT", "FROM",  "WHERE",  "GROUP",  "BY",     "HAVING",
                                "ORDER",  "LIMIT", "OFFSET", "UNION",  "ALL",    "INTERSECT",
                                "EXCEPT", "AS",    "ON",     "JOIN",   "INNER",  "LEFT",
                                "OUTER",  "CROSS", "AND",    "OR",     "NOT",    "IN",
                                "BETWEEN", "LIKE", "IS",     "NULL",   "DISTINCT", "ASC",
                                "DESC",   "CASE",  "WHEN",   "THEN",   "ELSE",   "END"};
    if (t.kind != TokenKind::Ident || t.quoted) return false;
    for (const char* k : kws)
      if (iequals(t.text, k)) return true;
    return false;
  }

  std::string expect_name(const char* what) {
    if (cur().kind != TokenKind::Ident || reserved(cur())) fail(std::string("expected ") + what);
    std::string name = cur().text;
    advance();
    return name;
  }

  //===------------------------------------------------------------------===//
  // SELECT statement
  //===------------------------------------------------------------------===//

  SelectPtr parse_select() {
    auto stmt = std::make_unique<SelectStmt>();
    stmt->cores.push_back(parse_core());
    while (true) {
      if (accept_kw("UNION")) {
        stmt->ops.push_back(accept_kw("ALL") ? SetOp::UnionAll : SetOp::Union);
      } else if (accept_kw("INTERSECT")) {
        stmt->ops.push_back(SetOp::Intersect);
      } else if (accept_kw("EXCEPT")) {
        stmt->ops.push_back(SetOp::Except);
      } else {
        break;
      }
      stmt->cores.push_back(parse_core());
    }
    if (accept_kw("ORDER")) {
      expect_kw("BY");
      do {
        OrderTerm term;
        term.expr = parse_expr();
        if (accept_kw("DESC"))
          term.descending = true;
        else
          accept_kw("ASC");
        stmt->order_by.push_back(std::move(term));
      } while (accept_punct(","));
    }
    if (accept_kw("LIMIT")) {
      stmt->limit = parse_expr();
      if (accept_kw("OFFSET")) {
        stmt->offset = parse_expr();
      } else if (accept_punct(",")) {  // LIMIT n, m == LIMIT m OFFSET n
        stmt->offset = std::move(stmt->limit);
        stmt->limit = parse_expr();
      }
    }
    return stmt;
  }

  SelectCore parse_core() {
    expect_kw("SELECT");
    SelectCore core;
    if (accept_kw("DISTINCT"))
      core.distinct = true;
    else
      accept_kw("ALL");

    do {
      core.columns.push_back(parse_result_column());
    } while (accept_punct(","));

    if (accept_kw("FROM")) core.from = parse_from();
    if (accept_kw("WHERE")) core.where = parse_expr();
    if (accept_kw("GROUP")) {
      expect_kw("BY");
      do {
        core.group_by.push_back(parse_expr());
      } while (accept_punct(","));
      if (accept_kw("HAVING")) core.having = parse_expr();
    }
    return core;
  }

  ResultColumn parse_result_column() {
    ResultColumn rc;
    if (cur().is_punct("*")) {
      advance();
      rc.kind = ResultColumn::Kind::Star;
      return rc;
    }
    // table.* form
    if (cur().kind == TokenKind::Ident && !reserved(cur()) && peek().is_punct(".") &&
        peek(2).is_punct("*")) {
      rc.kind = ResultColumn::Kind::TableStar;
      rc.table = cur().text;
      advance();
      advance();
      advance();
      return rc;
    }
    rc.kind = ResultColumn::Kind::Expr;
    rc.expr = parse_expr();
    if (accept_kw("AS")) {
      rc.alias = expect_name("column alias");
    } else if (cur().kind == TokenKind::Ident && !reserved(cur())) {
      rc.alias = cur().text;
      advance();
    }
    return rc;
  }

  std::vector<TableRef> parse_from() {
    std::vector<TableRef> refs;
    refs.push_back(parse_table_ref());
    while (true) {
      TableRef::JoinType jt = TableRef::JoinType::None;
      if (accept_punct(",")) {
        jt = TableRef::JoinType::Comma;
      } else if (cur().is_keyword("JOIN") || cur().is_keyword("INNER") ||
                 cur().is_keyword("LEFT") || cur().is_keyword("CROSS")) {
        if (accept_kw("INNER")) {
          jt = TableRef::JoinType::Inner;
        } else if (accept_kw("LEFT")) {
          accept_kw("OUTER");
          jt = TableRef::JoinType::Left;
        } else if (accept_kw("CROSS")) {
          jt = TableRef::JoinType::Cross;
        } else {
          jt = TableRef::JoinType::Inner;
        }
        expect_kw("JOIN");
      } else {
        break;
      }
      TableRef ref = parse_table_ref();
      ref.join = jt;
      if (accept_kw("ON")) ref.join_on = parse_expr();
      refs.push_back(std::move(ref));
    }
    return refs;
  }

  TableRef parse_table_ref() {
    TableRef ref;
    ref.offset = cur().offset;
    if (cur().is_punct("(")) {
      advance();
      if (!is_select_start()) fail("expected SELECT in parenthesized table reference");
      ref.kind = TableRef::Kind::Subquery;
      ref.subquery = parse_select();
      expect_punct(")");
    } else {
      ref.kind = TableRef::Kind::Base;
      ref.table = expect_name("table name");
    }
    if (accept_kw("AS")) {
      ref.alias = expect_name("table alias");
    } else if (cur().kind == TokenKind::Ident && !reserved(cur())) {
      ref.alias = cur().text;
      advance();
    }
    return ref;
  }

  //===------------------------------------------------------------------===//
  // Expressions (precedence climbing)
  //===------------------------------------------------------------------===//

  ExprPtr parse_expr() { return parse_or(); }

  ExprPtr make_binary(std::string op, ExprPtr lhs, ExprPtr rhs) {
    auto e = std::make_unique<Expr>();
    e->kind = ExprKind::Binary;
    e->op = std::move(op);
    e->lhs = std::move(lhs);
    e->rhs = std::move(rhs);
    return e;
  }

  ExprPtr parse_or() {
    auto lhs = parse_and();
    while (accept_kw("OR")) lhs = make_binary("OR", std::move(lhs), parse_and());
    return lhs;
  }

  ExprPtr parse_and() {
    auto lhs = parse_not();
    while (accept_kw("AND")) lhs = make_binary("AND", std::move(lhs), parse_not());
    return lhs;
  }

  ExprPtr parse_not() {
    if (accept_kw("NOT")) {
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Unary;
      e->op = "NOT";
      e->lhs = parse_not();
      return e;
    }
    return parse_comparison();
  }

  ExprPtr parse_comparison() {
    auto lhs = parse_additive();
    while (true) {
      if (cur().kind == TokenKind::Punct) {
        static const char* comps[] = {"=", "==", "!=", "<>", "<", "<=", ">", ">="};
        bool matched = false;
        for (const char* c : comps) {
          if (cur().is_punct(c)) {
            advance();
            lhs = make_binary(c, std::move(lhs), parse_additive());
            matched = true;
            break;
          }
        }
        if (matched) continue;
      }
      bool negated = false;
      size_t save = idx_;
      if (cur().is_keyword("NOT") &&
          (peek().is_keyword("BETWEEN") || peek().is_keyword("IN") || peek().is_keyword("LIKE"))) {
        negated = true;
        advance();
      }
      if (accept_kw("BETWEEN")) {
        auto e = std::make_unique<Expr>();
        e->kind = ExprKind::Between;
        e->negated = negated;
        e->lhs = std::move(lhs);
        e->low = parse_additive();
        expect_kw("AND");
        e->high = parse_additive();
        lhs = std::move(e);
        continue;
      }
      if (accept_kw("IN")) {
        expect_punct("(");
        auto e = std::make_unique<Expr>();
        e->negated = negated;
        e->lhs = std::move(lhs);
        if (is_select_start()) {
          e->kind = ExprKind::InSelect;
          e->subquery = parse_select();
        } else {
          e->kind = ExprKind::InList;
          do {
            e->list.push_back(parse_expr());
          } while (accept_punct(","));
        }
        expect_punct(")");
        lhs = std::move(e);
        continue;
      }
      if (accept_kw("LIKE")) {
        auto e = make_binary("LIKE", std::move(lhs), parse_additive());
        e->negated = negated;
        lhs = std::move(e);
        continue;
      }
      if (negated) idx_ = save;  // NOT belonged to something else
      if (accept_kw("IS")) {
        bool is_not = accept_kw("NOT");
        expect_kw("NULL");
        auto e = std::make_unique<Expr>();
        e->kind = ExprKind::IsNull;
        e->negated = is_not;
        e->lhs = std::move(lhs);
        lhs = std::move(e);
        continue;
      }
      break;
    }
    return lhs;
  }

  ExprPtr parse_additive() {
    auto lhs = parse_multiplicative();
    while (true) {
      if (cur().is_punct("+") || cur().is_punct("-") || cur().is_punct("||")) {
        std::string op = cur().text;
        advance();
        lhs = make_binary(op, std::move(lhs), parse_multiplicative());
      } else {
        break;
      }
    }
    return lhs;
  }

  ExprPtr parse_multiplicative() {
    auto lhs = parse_unary();
    while (true) {
      if (cur().is_punct("*") || cur().is_punct("/") || cur().is_punct("%")) {
        std::string op = cur().text;
        advance();
        lhs = make_binary(op, std::move(lhs), parse_unary());
      } else {
        break;
      }
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (cur().is_punct("-") || cur().is_punct("+")) {
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Unary;
      e->op = cur().text;
      advance();
      e->lhs = parse_unary();
      return e;
    }
    return parse_primary();
  }

  ExprPtr parse_primary() {
    const Token& t = cur();

    if (t.kind == TokenKind::Number) {
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Literal;
      e->literal_kind = (t.text.find('.') != std::string::npos ||
                         t.text.find('e') != std::string::npos ||
                         t.text.find('E') != std::string::npos)
                            ? LiteralKind::Real
                            : LiteralKind::Integer;
      e->literal_text = t.text;
      advance();
      return e;
    }
    if (t.kind == TokenKind::String) {
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Literal;
      e->literal_kind = LiteralKind::String;
      e->literal_text = t.text;
      advance();
      return e;
    }
    if (t.is_keyword("NULL")) {
      advance();
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Literal;
      e->literal_kind = LiteralKind::Null;
      return e;
    }
    if (t.is_punct("(")) {
      advance();
      if (is_select_start()) {
        auto e = std::make_unique<Expr>();
        e->kind = ExprKind::ScalarSubquery;
        e->subquery = parse_select();
        expect_punct(")");
        return e;
      }
      auto inner = parse_expr();
      expect_punct(")");
      return inner;
    }
    if (t.kind == TokenKind::Ident && !reserved(t)) {
      // Function call?
      if (peek().is_punct("(")) {
        auto e = std::make_unique<Expr>();
        e->kind = ExprKind::FuncCall;
        e->func_name = t.text;
        e->offset = t.offset;
        advance();  // name
        advance();  // (
        if (accept_punct(")")) return e;
        if (cur().is_punct("*")) {
          e->star_arg = true;
          advance();
        } else {
          if (accept_kw("DISTINCT")) e->distinct_arg = true;
          do {
            e->args.push_back(parse_expr());
          } while (accept_punct(","));
        }
        expect_punct(")");
        return e;
      }
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::ColumnRef;
      e->offset = t.offset;
      std::string first = t.text;
      advance();
      if (cur().is_punct(".") && peek().kind == TokenKind::Ident && !reserved(peek())) {
        advance();
        e->table = first;
        e->column = cur().text;
        advance();
      } else {
        e->column = first;
      }
      return e;
    }
    fail("expected expression");
  }
};

// Parses a single SELECT-form statement, throwing SqlSyntaxError or
// UnsupportedStatementError. The returned AST is the "parse handle".
inline SelectPtr parse_sql(std::string_view text) {
  return Parser(text).parse_statement();
}

inline bool parses(std::string_view text) {
  try {
    parse_sql(text);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace shieldsql::sql

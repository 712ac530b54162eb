#pragma once

// AST for the supported SELECT dialect: set operations over select cores,
// joins, subqueries in FROM / expressions, aggregates, ORDER BY / LIMIT.

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace shieldsql::sql {

struct Expr;
struct SelectStmt;
using ExprPtr = std::unique_ptr<Expr>;
using SelectPtr = std::unique_ptr<SelectStmt>;

enum class ExprKind {
  Literal,     // number / string / NULL
  ColumnRef,   // [table.]column
  Unary,       // -x, +x, NOT x
  Binary,      // arithmetic / comparison / AND / OR / LIKE / ||
  Between,     // x [NOT] BETWEEN a AND b
  InList,      // x [NOT] IN (e1, e2, ...)
  InSelect,    // x [NOT] IN (SELECT ...)
  IsNull,      // x IS [NOT] NULL
  FuncCall,    // f(args) | f(*) | f(DISTINCT arg)
  ScalarSubquery,
};

enum class LiteralKind { Integer, Real, String, Null };

struct Expr {
  ExprKind kind;

  // Literal
  LiteralKind literal_kind = LiteralKind::Null;
  std::string literal_text;

  // ColumnRef
  std::string table;   // empty when unqualified
  std::string column;
  size_t offset = 0;   // for error reporting

  // Unary / Binary
  std::string op;      // "-", "NOT", "=", "AND", "LIKE", ...
  ExprPtr lhs, rhs;

  // Between
  ExprPtr low, high;
  bool negated = false;

  // InList
  std::vector<ExprPtr> list;

  // FuncCall
  std::string func_name;
  bool star_arg = false;     // COUNT(*)
  bool distinct_arg = false;
  std::vector<ExprPtr> args;

  // InSelect / ScalarSubquery
  SelectPtr subquery;
};

struct ResultColumn {
  enum class Kind { Star, TableStar, Expr } kind = Kind::Expr;
  std::string table;           // for TableStar
  ExprPtr expr;                // for Expr
  std::optional<std::string> alias;
};

struct TableRef {
  enum class Kind { Base, Subquery } kind = Kind::Base;
  std::string table;           // Base
  SelectPtr subquery;          // Subquery
  std::optional<std::string> alias;
  // Join linkage: how this ref attaches to the previous one in the FROM list.
  enum class JoinType { None, Comma, Inner, Left, Cross } join = JoinType::None;
  ExprPtr join_on;             // optional ON condition
  size_t offset = 0;
};

struct OrderTerm {
  ExprPtr expr;
  bool descending = false;
};

struct SelectCore {
  bool distinct = false;
  std::vector<ResultColumn> columns;
  std::vector<TableRef> from;
  ExprPtr where;
  std::vector<ExprPtr> group_by;
  ExprPtr having;
};

enum class SetOp { Union, UnionAll, Intersect, Except };

struct SelectStmt {
  std::vector<SelectCore> cores;       // cores.size() == ops.size() + 1
  std::vector<SetOp> ops;
  std::vector<OrderTerm> order_by;
  ExprPtr limit;
  ExprPtr offset;

  bool has_order_by() const { return !order_by.empty(); }
};

}  // namespace shieldsql::sql

#pragma once

// Deterministic clause-by-clause SQL verbalizer: the offline fallback for
// question synthesis. The same input always yields the same question text.

#include <string>

#include "shieldsql/sql/ast.hpp"
#include "shieldsql/sql/parser.hpp"

namespace shieldsql {

namespace detail {

inline std::string expr_text(const sql::Expr& e);

inline std::string operand_text(const sql::Expr& e) { return expr_text(e); }

inline std::string expr_text(const sql::Expr& e) {
  using sql::ExprKind;
  using sql::LiteralKind;
  switch (e.kind) {
    case ExprKind::Literal:
      switch (e.literal_kind) {
        case LiteralKind::Null: return "null";
        case LiteralKind::String: return "'" + e.literal_text + "'";
        default: return e.literal_text;
      }
    case ExprKind::ColumnRef:
      return e.table.empty() ? e.column : e.table + "." + e.column;
    case ExprKind::Unary:
      if (e.op == "NOT") return "not " + operand_text(*e.lhs);
      return e.op + operand_text(*e.lhs);
    case ExprKind::Binary: {
      std::string op = e.op;
      if (op == "AND") op = "and";
      else if (op == "OR") op = "or";
      else if (op == "LIKE") op = e.negated ? "not like" : "like";
      return operand_text(*e.lhs) + " " + op + " " + operand_text(*e.rhs);
    }
    case ExprKind::Between:
      return operand_text(*e.lhs) + (e.negated ? " not between " : " between ") +
             operand_text(*e.low) + " and " + operand_text(*e.high);
    case ExprKind::InList: {
      std::string items;
      for (size_t i = 0; i < e.list.size(); ++i) {
        if (i) items += ", ";
        items += operand_text(*e.list[i]);
      }
      return operand_text(*e.lhs) + (e.negated ? " not in (" : " in (") + items + ")";
    }
    case ExprKind::InSelect:
      return operand_text(*e.lhs) + (e.negated ? " not in (" : " in (") + "a subquery)";
    case ExprKind::IsNull:
      return operand_text(*e.lhs) + (e.negated ? " is not null" : " is null");
    case ExprKind::FuncCall: {
      std::string f = to_lower(e.func_name);
      std::string arg = e.star_arg ? "rows" : (e.args.empty() ? "" : operand_text(*e.args[0]));
      if (f == "count" && e.star_arg) return "the number of rows";
      if (f == "count") return "the count of " + arg;
      if (f == "sum") return "the total " + arg;
      if (f == "avg") return "the average " + arg;
      if (f == "min") return "the lowest " + arg;
      if (f == "max") return "the highest " + arg;
      return f + " of " + arg;
    }
    case ExprKind::ScalarSubquery:
      return "the result of a subquery";
  }
  return "";
}

inline std::string from_text(const std::vector<sql::TableRef>& from) {
  std::string out;
  for (size_t i = 0; i < from.size(); ++i) {
    if (i) out += " joined with ";
    if (from[i].kind == sql::TableRef::Kind::Base)
      out += from[i].table;
    else
      out += "a derived table";
  }
  return out;
}

}  // namespace detail

// Renders a parsed statement as a question. The single COUNT(*) form maps to
// the frozen "How many rows are in T?" shape.
inline std::string verbalize_sql(const sql::SelectStmt& stmt) {
  const sql::SelectCore& core = stmt.cores.front();

  std::string where_part;
  if (core.where) where_part = " where " + detail::expr_text(*core.where);

  std::string tail;
  if (!core.group_by.empty()) {
    tail += " grouped by ";
    for (size_t i = 0; i < core.group_by.size(); ++i) {
      if (i) tail += ", ";
      tail += detail::expr_text(*core.group_by[i]);
    }
  }
  if (!stmt.order_by.empty()) {
    tail += " ordered by ";
    for (size_t i = 0; i < stmt.order_by.size(); ++i) {
      if (i) tail += ", ";
      tail += detail::expr_text(*stmt.order_by[i].expr);
      if (stmt.order_by[i].descending) tail += " descending";
    }
  }
  if (stmt.limit) tail += " limited to " + detail::expr_text(*stmt.limit) + " rows";
  if (stmt.cores.size() > 1) tail += " combined with further queries";

  std::string from_part =
      core.from.empty() ? "" : (" in " + detail::from_text(core.from));

  // Lone COUNT(*) reads as a row-count question.
  if (core.columns.size() == 1 && core.columns[0].kind == sql::ResultColumn::Kind::Expr) {
    const sql::Expr& e = *core.columns[0].expr;
    if (e.kind == sql::ExprKind::FuncCall && iequals(e.func_name, "COUNT") && e.star_arg)
      return "How many rows are" + from_part + where_part + tail + "?";
  }

  std::string items;
  for (size_t i = 0; i < core.columns.size(); ++i) {
    if (i) items += (i + 1 == core.columns.size()) ? " and " : ", ";
    const auto& rc = core.columns[i];
    switch (rc.kind) {
      case sql::ResultColumn::Kind::Star: items += "all columns"; break;
      case sql::ResultColumn::Kind::TableStar: items += "all columns of " + rc.table; break;
      case sql::ResultColumn::Kind::Expr: items += detail::expr_text(*rc.expr); break;
    }
  }
  std::string lead = core.distinct ? "What are the distinct values of " : "What are the values of ";
  return lead + items + from_part + where_part + tail + "?";
}

inline std::string verbalize_sql(const std::string& sql_text) {
  return verbalize_sql(*sql::parse_sql(sql_text));
}

}  // namespace shieldsql

#pragma once

// Projection lineage: which base columns a query's output exposes, and which
// it references anywhere. Aliases, star expansion and subquery projections
// all resolve down to schema columns.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "shieldsql/schema.hpp"
#include "shieldsql/sql/ast.hpp"
#include "shieldsql/sql/parser.hpp"

namespace shieldsql::sql {

struct ColumnLineage {
  std::set<QualifiedColumn> output_columns;      // exposed by the projection
  std::set<QualifiedColumn> referenced_columns;  // appearing anywhere
};

namespace detail {

// One named output of a relation, with the base columns feeding it.
struct OutCol {
  std::string name;
  std::set<QualifiedColumn> base;
};

// A relation in scope: a base table or a subquery projection.
struct Relation {
  std::string binding;  // alias (or table name) used for qualified lookup; may be empty
  std::vector<OutCol> cols;
};

class Analyzer {
 public:
  Analyzer(const DatabaseSchema& schema, std::set<QualifiedColumn>& referenced)
      : schema_(schema), referenced_(referenced) {}

  // Resolves a statement to its projection, accumulating referenced columns.
  std::vector<OutCol> analyze(const SelectStmt& stmt,
                              const std::vector<std::vector<Relation>>& outer) {
    std::vector<std::vector<OutCol>> core_projections;
    for (const auto& core : stmt.cores) core_projections.push_back(analyze_core(core, outer));

    // Left core names the projection; under set operations each output column
    // may be fed by the corresponding position of every member.
    std::vector<OutCol> projection = core_projections.front();
    for (size_t k = 1; k < core_projections.size(); ++k) {
      const auto& rhs = core_projections[k];
      for (size_t i = 0; i < projection.size() && i < rhs.size(); ++i)
        projection[i].base.insert(rhs[i].base.begin(), rhs[i].base.end());
    }

    // ORDER BY / LIMIT resolve against the first core's scope + aliases.
    if (!stmt.order_by.empty() || stmt.limit || stmt.offset) {
      auto scope = build_scope(stmt.cores.front(), outer);
      auto scopes = outer;
      scopes.push_back(scope);
      for (const auto& term : stmt.order_by) walk_order_expr(*term.expr, scopes, projection);
      if (stmt.limit) walk(*stmt.limit, scopes);
      if (stmt.offset) walk(*stmt.offset, scopes);
    }
    return projection;
  }

 private:
  const DatabaseSchema& schema_;
  std::set<QualifiedColumn>& referenced_;

  Relation base_relation(const TableRef& ref) const {
    const Table* t = schema_.find_table(ref.table);
    if (!t) throw AnalysisError("unresolved table: " + ref.table, ref.table);
    Relation rel;
    rel.binding = ref.alias.value_or(t->name);
    for (const auto& c : t->columns) rel.cols.push_back({c.name, {{t->name, c.name}}});
    return rel;
  }

  std::vector<Relation> build_scope(const SelectCore& core,
                                    const std::vector<std::vector<Relation>>& outer) {
    std::vector<Relation> scope;
    for (const auto& ref : core.from) {
      if (ref.kind == TableRef::Kind::Base) {
        scope.push_back(base_relation(ref));
      } else {
        Relation rel;
        rel.binding = ref.alias.value_or("");
        rel.cols = analyze(*ref.subquery, outer);
        scope.push_back(std::move(rel));
      }
    }
    return scope;
  }

  std::vector<OutCol> analyze_core(const SelectCore& core,
                                   const std::vector<std::vector<Relation>>& outer) {
    std::vector<Relation> scope = build_scope(core, outer);
    auto scopes = outer;
    scopes.push_back(scope);

    // JOIN conditions and filter clauses only feed referenced_columns.
    for (const auto& ref : core.from)
      if (ref.join_on) walk(*ref.join_on, scopes);
    if (core.where) walk(*core.where, scopes);
    for (const auto& g : core.group_by) walk(*g, scopes);
    if (core.having) walk(*core.having, scopes);

    std::vector<OutCol> projection;
    for (const auto& rc : core.columns) {
      switch (rc.kind) {
        case ResultColumn::Kind::Star:
          for (const auto& rel : scope)
            for (const auto& oc : rel.cols) {
              projection.push_back(oc);
              referenced_.insert(oc.base.begin(), oc.base.end());
            }
          break;
        case ResultColumn::Kind::TableStar: {
          const Relation* rel = find_relation(scope, rc.table);
          if (!rel) throw AnalysisError("unresolved table in star: " + rc.table, rc.table);
          for (const auto& oc : rel->cols) {
            projection.push_back(oc);
            referenced_.insert(oc.base.begin(), oc.base.end());
          }
          break;
        }
        case ResultColumn::Kind::Expr: {
          OutCol oc;
          oc.base = walk(*rc.expr, scopes);
          oc.name = rc.alias ? *rc.alias : derive_name(*rc.expr);
          projection.push_back(std::move(oc));
          break;
        }
      }
    }
    return projection;
  }

  static std::string derive_name(const Expr& e) {
    if (e.kind == ExprKind::ColumnRef) return e.column;
    if (e.kind == ExprKind::FuncCall) return to_lower(e.func_name);
    return "";
  }

  static const Relation* find_relation(const std::vector<Relation>& scope, std::string_view name) {
    for (const auto& rel : scope)
      if (!rel.binding.empty() && iequals(rel.binding, name)) return &rel;
    return nullptr;
  }

  // Resolves a column reference through the scope stack, innermost first.
  std::set<QualifiedColumn> resolve_column(const Expr& e,
                                           const std::vector<std::vector<Relation>>& scopes) {
    for (auto it = scopes.rbegin(); it != scopes.rend(); ++it) {
      const auto& scope = *it;
      if (!e.table.empty()) {
        const Relation* rel = find_relation(scope, e.table);
        if (!rel) continue;
        for (const auto& oc : rel->cols)
          if (iequals(oc.name, e.column)) return oc.base;
        throw AnalysisError("unresolved column: " + e.table + "." + e.column,
                            e.table + "." + e.column);
      }
      const OutCol* found = nullptr;
      for (const auto& rel : scope)
        for (const auto& oc : rel.cols)
          if (iequals(oc.name, e.column)) {
            if (found && found->base != oc.base)
              throw AnalysisError("ambiguous column: " + e.column, e.column);
            found = &oc;
          }
      if (found) return found->base;
    }
    throw AnalysisError("unresolved column: " + (e.table.empty() ? e.column : e.table + "." + e.column),
                        e.table.empty() ? e.column : e.table + "." + e.column);
  }

  // Walks an expression, returning the base columns it draws from and
  // recording every resolved reference.
  std::set<QualifiedColumn> walk(const Expr& e, const std::vector<std::vector<Relation>>& scopes) {
    std::set<QualifiedColumn> out;
    auto merge = [&out](const std::set<QualifiedColumn>& s) { out.insert(s.begin(), s.end()); };
    switch (e.kind) {
      case ExprKind::Literal:
        break;
      case ExprKind::ColumnRef: {
        auto base = resolve_column(e, scopes);
        referenced_.insert(base.begin(), base.end());
        merge(base);
        break;
      }
      case ExprKind::Unary:
        merge(walk(*e.lhs, scopes));
        break;
      case ExprKind::Binary:
        merge(walk(*e.lhs, scopes));
        merge(walk(*e.rhs, scopes));
        break;
      case ExprKind::Between:
        merge(walk(*e.lhs, scopes));
        merge(walk(*e.low, scopes));
        merge(walk(*e.high, scopes));
        break;
      case ExprKind::InList:
        merge(walk(*e.lhs, scopes));
        for (const auto& item : e.list) merge(walk(*item, scopes));
        break;
      case ExprKind::InSelect: {
        merge(walk(*e.lhs, scopes));
        for (const auto& oc : analyze(*e.subquery, scopes)) merge(oc.base);
        break;
      }
      case ExprKind::IsNull:
        merge(walk(*e.lhs, scopes));
        break;
      case ExprKind::FuncCall:
        // COUNT(*) draws from no particular column.
        for (const auto& arg : e.args) merge(walk(*arg, scopes));
        break;
      case ExprKind::ScalarSubquery:
        for (const auto& oc : analyze(*e.subquery, scopes)) merge(oc.base);
        break;
    }
    return out;
  }

  // ORDER BY may name projection aliases or ordinal positions.
  void walk_order_expr(const Expr& e, const std::vector<std::vector<Relation>>& scopes,
                       const std::vector<OutCol>& projection) {
    if (e.kind == ExprKind::Literal && e.literal_kind == LiteralKind::Integer) {
      size_t pos = static_cast<size_t>(std::stoll(e.literal_text));
      if (pos >= 1 && pos <= projection.size())
        referenced_.insert(projection[pos - 1].base.begin(), projection[pos - 1].base.end());
      return;
    }
    if (e.kind == ExprKind::ColumnRef && e.table.empty()) {
      for (const auto& oc : projection)
        if (iequals(oc.name, e.column)) {
          referenced_.insert(oc.base.begin(), oc.base.end());
          return;
        }
    }
    walk(e, scopes);
  }
};

}  // namespace detail

// Computes output and referenced lineage of a parsed statement.
inline ColumnLineage output_lineage(const SelectStmt& stmt, const DatabaseSchema& schema) {
  ColumnLineage lin;
  detail::Analyzer analyzer(schema, lin.referenced_columns);
  auto projection = analyzer.analyze(stmt, {});
  for (const auto& oc : projection)
    lin.output_columns.insert(oc.base.begin(), oc.base.end());
  // Projection outputs are by definition also referenced.
  lin.referenced_columns.insert(lin.output_columns.begin(), lin.output_columns.end());
  return lin;
}

inline ColumnLineage output_lineage(std::string_view sql_text, const DatabaseSchema& schema) {
  auto stmt = parse_sql(sql_text);
  return output_lineage(*stmt, schema);
}

// All columns a query touches (projection + predicates + clauses).
inline std::set<QualifiedColumn> referenced_columns(std::string_view sql_text,
                                                    const DatabaseSchema& schema) {
  return output_lineage(sql_text, schema).referenced_columns;
}

// True when any select core anywhere in the statement has a WHERE clause.
inline bool has_row_restriction(const SelectStmt& stmt) {
  for (const auto& core : stmt.cores) {
    if (core.where) return true;
    for (const auto& ref : core.from)
      if (ref.kind == TableRef::Kind::Subquery && has_row_restriction(*ref.subquery)) return true;
  }
  return false;
}

}  // namespace shieldsql::sql

#pragma once

// Database schema description and declarative security constraints.

#include <optional>
#include <string>
#include <vector>

#include "shieldsql/common.hpp"

#include <json.hpp>

namespace shieldsql {

enum class ColumnType { Integer, Real, Text };

inline std::string to_string(ColumnType t) {
  switch (t) {
    case ColumnType::Integer: return "integer";
    case ColumnType::Real: return "real";
    case ColumnType::Text: return "text";
  }
  return "text";
}

inline ColumnType column_type_from_string(const std::string& s) {
  if (iequals(s, "integer")) return ColumnType::Integer;
  if (iequals(s, "real")) return ColumnType::Real;
  if (iequals(s, "text")) return ColumnType::Text;
  throw std::invalid_argument("unknown column type: " + s);
}

struct Column {
  std::string name;
  ColumnType type = ColumnType::Text;
  bool primary_key = false;
};

struct Table {
  std::string name;
  std::vector<Column> columns;

  const Column* find_column(std::string_view col) const {
    for (const auto& c : columns)
      if (iequals(c.name, col)) return &c;
    return nullptr;
  }
};

// "child.column -> parent.column"
struct ForeignKey {
  std::string child_table, child_column;
  std::string parent_table, parent_column;
};

// A qualified column reference, canonical case taken from the schema.
struct QualifiedColumn {
  std::string table, column;

  std::string str() const { return table + "." + column; }
  bool operator==(const QualifiedColumn& o) const {
    return iequals(table, o.table) && iequals(column, o.column);
  }
  bool operator<(const QualifiedColumn& o) const {
    std::string a = to_lower(table) + "." + to_lower(column);
    std::string b = to_lower(o.table) + "." + to_lower(o.column);
    return a < b;
  }
};

inline QualifiedColumn parse_qualified(const std::string& s) {
  size_t dot = s.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == s.size())
    throw std::invalid_argument("expected table.column, got: " + s);
  return {s.substr(0, dot), s.substr(dot + 1)};
}

struct DatabaseSchema {
  std::vector<Table> tables;
  std::vector<ForeignKey> foreign_keys;

  const Table* find_table(std::string_view name) const {
    for (const auto& t : tables)
      if (iequals(t.name, name)) return &t;
    return nullptr;
  }

  bool has_column(const QualifiedColumn& qc) const {
    const Table* t = find_table(qc.table);
    return t && t->find_column(qc.column);
  }

  // Canonicalizes the case of a table.column reference against the schema.
  std::optional<QualifiedColumn> resolve(std::string_view table, std::string_view column) const {
    const Table* t = find_table(table);
    if (!t) return std::nullopt;
    const Column* c = t->find_column(column);
    if (!c) return std::nullopt;
    return QualifiedColumn{t->name, c->name};
  }

  // Table names unique, column names unique per table, FK endpoints exist.
  std::vector<std::string> check_invariants() const {
    std::vector<std::string> problems;
    for (size_t i = 0; i < tables.size(); ++i)
      for (size_t j = i + 1; j < tables.size(); ++j)
        if (iequals(tables[i].name, tables[j].name))
          problems.push_back("duplicate table name: " + tables[i].name);
    for (const auto& t : tables)
      for (size_t i = 0; i < t.columns.size(); ++i)
        for (size_t j = i + 1; j < t.columns.size(); ++j)
          if (iequals(t.columns[i].name, t.columns[j].name))
            problems.push_back("duplicate column " + t.columns[i].name + " in table " + t.name);
    for (const auto& fk : foreign_keys) {
      if (!has_column({fk.child_table, fk.child_column}))
        problems.push_back("foreign key child missing: " + fk.child_table + "." + fk.child_column);
      if (!has_column({fk.parent_table, fk.parent_column}))
        problems.push_back("foreign key parent missing: " + fk.parent_table + "." + fk.parent_column);
    }
    return problems;
  }
};

//===--------------------------------------------------------------------===//
// Security constraints
//===--------------------------------------------------------------------===//

enum class ConstraintScope { ColumnLevel, RowLevel, Hybrid };

inline std::string to_string(ConstraintScope s) {
  switch (s) {
    case ConstraintScope::ColumnLevel: return "column_level";
    case ConstraintScope::RowLevel: return "row_level";
    case ConstraintScope::Hybrid: return "hybrid";
  }
  return "column_level";
}

inline ConstraintScope scope_from_string(const std::string& s) {
  if (s == "column_level") return ConstraintScope::ColumnLevel;
  if (s == "row_level") return ConstraintScope::RowLevel;
  if (s == "hybrid") return ConstraintScope::Hybrid;
  throw std::invalid_argument("unknown constraint scope: " + s);
}

// Comparison operators allowed in a qualification predicate.
enum class QualOp { Eq, Ne, Lt, Le, Gt, Ge, IsNull, IsNotNull };

inline std::string to_string(QualOp op) {
  switch (op) {
    case QualOp::Eq: return "=";
    case QualOp::Ne: return "!=";
    case QualOp::Lt: return "<";
    case QualOp::Le: return "<=";
    case QualOp::Gt: return ">";
    case QualOp::Ge: return ">=";
    case QualOp::IsNull: return "IS NULL";
    case QualOp::IsNotNull: return "IS NOT NULL";
  }
  return "=";
}

inline QualOp qual_op_from_string(const std::string& s) {
  if (s == "=") return QualOp::Eq;
  if (s == "!=" || s == "<>") return QualOp::Ne;
  if (s == "<") return QualOp::Lt;
  if (s == "<=") return QualOp::Le;
  if (s == ">") return QualOp::Gt;
  if (s == ">=") return QualOp::Ge;
  if (iequals(s, "IS NULL")) return QualOp::IsNull;
  if (iequals(s, "IS NOT NULL")) return QualOp::IsNotNull;
  throw std::invalid_argument("unknown qualification operator: " + s);
}

inline bool qual_op_takes_literal(QualOp op) {
  return op != QualOp::IsNull && op != QualOp::IsNotNull;
}

struct Qualification {
  QualifiedColumn column;
  QualOp op = QualOp::Eq;
  std::string literal;  // ignored for IS NULL / IS NOT NULL
};

struct SecurityConstraint {
  std::string id;
  std::string description;
  std::vector<QualifiedColumn> target_fields;
  std::optional<Qualification> qualification;
  ConstraintScope scope = ConstraintScope::ColumnLevel;

  // Structural checks against a schema; empty result means well-formed.
  std::vector<std::string> check(const DatabaseSchema& schema) const {
    std::vector<std::string> problems;
    if (target_fields.empty()) problems.push_back("constraint " + id + ": no target fields");
    for (const auto& tf : target_fields)
      if (!schema.has_column(tf))
        problems.push_back("constraint " + id + ": unresolved target field " + tf.str());
    bool has_qual = qualification.has_value();
    if ((scope != ConstraintScope::ColumnLevel) != has_qual)
      problems.push_back("constraint " + id + ": qualification must be present iff scope is not column_level");
    if (has_qual && !schema.has_column(qualification->column))
      problems.push_back("constraint " + id + ": unresolved qualification column " +
                         qualification->column.str());
    return problems;
  }
};

//===--------------------------------------------------------------------===//
// JSON round-trip (canonical field order)
//===--------------------------------------------------------------------===//

using ojson = nlohmann::ordered_json;

inline ojson to_json(const DatabaseSchema& s) {
  ojson j;
  j["tables"] = ojson::array();
  for (const auto& t : s.tables) {
    ojson jt;
    jt["name"] = t.name;
    jt["columns"] = ojson::array();
    for (const auto& c : t.columns) {
      ojson jc;
      jc["name"] = c.name;
      jc["type"] = to_string(c.type);
      if (c.primary_key) jc["pk"] = true;
      jt["columns"].push_back(jc);
    }
    j["tables"].push_back(jt);
  }
  j["foreign_keys"] = ojson::array();
  for (const auto& fk : s.foreign_keys) {
    ojson jf;
    jf["from"] = fk.child_table + "." + fk.child_column;
    jf["to"] = fk.parent_table + "." + fk.parent_column;
    j["foreign_keys"].push_back(jf);
  }
  return j;
}

inline DatabaseSchema schema_from_json(const ojson& j) {
  DatabaseSchema s;
  for (const auto& jt : j.at("tables")) {
    Table t;
    t.name = jt.at("name").get<std::string>();
    for (const auto& jc : jt.at("columns")) {
      Column c;
      c.name = jc.at("name").get<std::string>();
      c.type = column_type_from_string(jc.at("type").get<std::string>());
      c.primary_key = jc.value("pk", false);
      t.columns.push_back(std::move(c));
    }
    s.tables.push_back(std::move(t));
  }
  if (j.contains("foreign_keys")) {
    for (const auto& jf : j.at("foreign_keys")) {
      auto from = parse_qualified(jf.at("from").get<std::string>());
      auto to = parse_qualified(jf.at("to").get<std::string>());
      s.foreign_keys.push_back({from.table, from.column, to.table, to.column});
    }
  }
  return s;
}

inline ojson to_json(const SecurityConstraint& c) {
  ojson j;
  j["id"] = c.id;
  j["description"] = c.description;
  j["target_fields"] = ojson::array();
  for (const auto& tf : c.target_fields) j["target_fields"].push_back(tf.str());
  if (c.qualification) {
    ojson q;
    q["column"] = c.qualification->column.str();
    q["op"] = to_string(c.qualification->op);
    if (qual_op_takes_literal(c.qualification->op)) q["literal"] = c.qualification->literal;
    j["qualification"] = q;
  } else {
    j["qualification"] = nullptr;
  }
  j["scope"] = to_string(c.scope);
  return j;
}

inline SecurityConstraint constraint_from_json(const ojson& j) {
  SecurityConstraint c;
  c.id = j.value("id", "");
  c.description = j.at("description").get<std::string>();
  for (const auto& tf : j.at("target_fields"))
    c.target_fields.push_back(parse_qualified(tf.get<std::string>()));
  if (j.contains("qualification") && !j.at("qualification").is_null()) {
    const auto& q = j.at("qualification");
    Qualification qual;
    qual.column = parse_qualified(q.at("column").get<std::string>());
    qual.op = qual_op_from_string(q.at("op").get<std::string>());
    if (qual_op_takes_literal(qual.op)) qual.literal = q.at("literal").get<std::string>();
    c.qualification = qual;
  }
  c.scope = scope_from_string(j.at("scope").get<std::string>());
  return c;
}

}  // namespace shieldsql

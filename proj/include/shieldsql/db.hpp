#pragma once

// Read-only execution against embedded SQLite files, result normalization
// and the execution-equivalence decision used by the EX verifier.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <sqlite3.h>

#include "shieldsql/common.hpp"
#include "shieldsql/schema.hpp"
#include "shieldsql/sql/parser.hpp"

namespace shieldsql {

using Cell = std::variant<std::monostate, int64_t, double, std::string>;

struct ExecLimits {
  double timeout_seconds = 5.0;
  size_t max_rows = 10000;
};

struct ResultTable {
  std::vector<std::string> column_names;
  std::vector<std::vector<Cell>> rows;
  bool order_sensitive = false;  // top-level ORDER BY present
  bool truncated = false;        // row cap hit

  size_t arity() const { return column_names.size(); }
};

//===--------------------------------------------------------------------===//
// Database handle (single-owner, read-only)
//===--------------------------------------------------------------------===//

class Database {
 public:
  explicit Database(const std::string& path, bool in_memory = false) : path_(path) {
    int flags = in_memory ? (SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE)
                          : SQLITE_OPEN_READONLY;
    int rc = sqlite3_open_v2(in_memory ? ":memory:" : path.c_str(), &db_, flags, nullptr);
    if (rc != SQLITE_OK) {
      std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
      if (db_) sqlite3_close(db_);
      db_ = nullptr;
      throw IoError("cannot open database " + path + ": " + msg);
    }
  }

  Database(const Database&) = delete;
  Database& operator=(const Database&) = delete;
  Database(Database&& o) noexcept : db_(o.db_), path_(std::move(o.path_)) { o.db_ = nullptr; }

  ~Database() {
    if (db_) sqlite3_close(db_);
  }

  sqlite3* raw() const { return db_; }
  const std::string& path() const { return path_; }

 private:
  sqlite3* db_ = nullptr;
  std::string path_;
};

// Writable handle for fixture construction only.
class WritableDatabase {
 public:
  explicit WritableDatabase(const std::string& path) {
    int rc = sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE,
                             nullptr);
    if (rc != SQLITE_OK) {
      std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
      if (db_) sqlite3_close(db_);
      throw IoError("cannot create database " + path + ": " + msg);
    }
  }
  WritableDatabase(const WritableDatabase&) = delete;
  WritableDatabase& operator=(const WritableDatabase&) = delete;
  ~WritableDatabase() {
    if (db_) sqlite3_close(db_);
  }

  void exec(const std::string& sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
      std::string msg = err ? err : "unknown error";
      sqlite3_free(err);
      throw ExecError("fixture statement failed: " + msg);
    }
  }

 private:
  sqlite3* db_ = nullptr;
};

//===--------------------------------------------------------------------===//
// Execution
//===--------------------------------------------------------------------===//

namespace detail {
struct Deadline {
  std::chrono::steady_clock::time_point at;
};
inline int progress_cb(void* ctx) {
  auto* d = static_cast<Deadline*>(ctx);
  return std::chrono::steady_clock::now() > d->at ? 1 : 0;
}
}  // namespace detail

// Runs an already-parse-checked SELECT. Read-only by handle construction;
// rows are capped at limits.max_rows with the truncated flag set.
inline ResultTable execute(const Database& db, const std::string& sql_text,
                           const ExecLimits& limits = {}) {
  auto stmt_ast = sql::parse_sql(sql_text);  // rejects non-SELECT up front

  detail::Deadline deadline{std::chrono::steady_clock::now() +
                            std::chrono::microseconds(static_cast<int64_t>(
                                limits.timeout_seconds * 1e6))};
  sqlite3_progress_handler(db.raw(), 1000, detail::progress_cb, &deadline);

  sqlite3_stmt* stmt = nullptr;
  int rc = sqlite3_prepare_v2(db.raw(), sql_text.c_str(), -1, &stmt, nullptr);
  if (rc != SQLITE_OK) {
    std::string msg = sqlite3_errmsg(db.raw());
    sqlite3_progress_handler(db.raw(), 0, nullptr, nullptr);
    throw ExecError("engine error: " + msg);
  }

  ResultTable result;
  result.order_sensitive = stmt_ast->has_order_by();
  int ncols = sqlite3_column_count(stmt);
  for (int i = 0; i < ncols; ++i) {
    const char* name = sqlite3_column_name(stmt, i);
    result.column_names.push_back(name ? name : "");
  }

  while (true) {
    rc = sqlite3_step(stmt);
    if (rc == SQLITE_ROW) {
      if (result.rows.size() >= limits.max_rows) {
        result.truncated = true;
        break;
      }
      std::vector<Cell> row;
      row.reserve(static_cast<size_t>(ncols));
      for (int i = 0; i < ncols; ++i) {
        switch (sqlite3_column_type(stmt, i)) {
          case SQLITE_NULL:
            row.emplace_back(std::monostate{});
            break;
          case SQLITE_INTEGER:
            row.emplace_back(static_cast<int64_t>(sqlite3_column_int64(stmt, i)));
            break;
          case SQLITE_FLOAT:
            row.emplace_back(sqlite3_column_double(stmt, i));
            break;
          default: {
            const unsigned char* t = sqlite3_column_text(stmt, i);
            row.emplace_back(std::string(t ? reinterpret_cast<const char*>(t) : ""));
            break;
          }
        }
      }
      result.rows.push_back(std::move(row));
    } else if (rc == SQLITE_DONE) {
      break;
    } else {
      std::string msg = sqlite3_errmsg(db.raw());
      sqlite3_finalize(stmt);
      sqlite3_progress_handler(db.raw(), 0, nullptr, nullptr);
      if (rc == SQLITE_INTERRUPT) throw TimeoutError("query timed out: " + sql_text);
      throw ExecError("engine error: " + msg);
    }
  }
  sqlite3_finalize(stmt);
  sqlite3_progress_handler(db.raw(), 0, nullptr, nullptr);
  return result;
}

// Reads the schema back out of a database file (tables, columns, types,
// primary keys). Used wherever a constraint must be checked against a live
// handle rather than a record's embedded schema.
inline DatabaseSchema introspect_schema(const Database& db) {
  DatabaseSchema schema;
  sqlite3_stmt* stmt = nullptr;
  if (sqlite3_prepare_v2(db.raw(),
                         "SELECT name FROM sqlite_master WHERE type='table' AND name NOT LIKE "
                         "'sqlite_%' ORDER BY name",
                         -1, &stmt, nullptr) != SQLITE_OK)
    throw ExecError(std::string("schema introspection failed: ") + sqlite3_errmsg(db.raw()));
  std::vector<std::string> names;
  while (sqlite3_step(stmt) == SQLITE_ROW)
    names.emplace_back(reinterpret_cast<const char*>(sqlite3_column_text(stmt, 0)));
  sqlite3_finalize(stmt);

  for (const auto& name : names) {
    Table t;
    t.name = name;
    std::string pragma = "PRAGMA table_info(\"" + name + "\")";
    if (sqlite3_prepare_v2(db.raw(), pragma.c_str(), -1, &stmt, nullptr) != SQLITE_OK)
      throw ExecError(std::string("schema introspection failed: ") + sqlite3_errmsg(db.raw()));
    while (sqlite3_step(stmt) == SQLITE_ROW) {
      Column c;
      c.name = reinterpret_cast<const char*>(sqlite3_column_text(stmt, 1));
      std::string decl = to_lower(reinterpret_cast<const char*>(sqlite3_column_text(stmt, 2)));
      if (decl.find("int") != std::string::npos)
        c.type = ColumnType::Integer;
      else if (decl.find("real") != std::string::npos || decl.find("floa") != std::string::npos ||
               decl.find("doub") != std::string::npos)
        c.type = ColumnType::Real;
      else
        c.type = ColumnType::Text;
      c.primary_key = sqlite3_column_int(stmt, 5) != 0;
      t.columns.push_back(std::move(c));
    }
    sqlite3_finalize(stmt);
    schema.tables.push_back(std::move(t));
  }
  return schema;
}

//===--------------------------------------------------------------------===//
// Equivalence
//===--------------------------------------------------------------------===//

// Normal form: reals to 6 decimal places, text trailing-whitespace stripped,
// null distinct from empty text, integers widened to match reals.
inline std::string normalize_cell(const Cell& c) {
  struct V {
    std::string operator()(std::monostate) const { return "\x01null"; }
    std::string operator()(int64_t v) const {
      char buf[48];
      std::snprintf(buf, sizeof(buf), "n:%.6f", static_cast<double>(v));
      return buf;
    }
    std::string operator()(double v) const {
      if (std::isnan(v)) return "n:nan";
      char buf[48];
      std::snprintf(buf, sizeof(buf), "n:%.6f", v);
      // Negative values inside the tolerance must land on the same normal
      // form as +0.
      if (std::string_view(buf) == "n:-0.000000") return "n:0.000000";
      return buf;
    }
    std::string operator()(const std::string& s) const { return "t:" + rstrip(s); }
  };
  return std::visit(V{}, c);
}

inline std::vector<std::string> normalize_row(const std::vector<Cell>& row) {
  std::vector<std::string> out;
  out.reserve(row.size());
  for (const auto& c : row) out.push_back(normalize_cell(c));
  return out;
}

// Execution equivalence: sequence equality when either side carries a
// top-level ORDER BY, multiset equality otherwise. Column names are ignored
// but arity must match.
inline bool equivalent(const ResultTable& a, const ResultTable& b) {
  if (a.arity() != b.arity()) return false;
  if (a.rows.size() != b.rows.size()) return false;
  std::vector<std::vector<std::string>> na, nb;
  na.reserve(a.rows.size());
  nb.reserve(b.rows.size());
  for (const auto& r : a.rows) na.push_back(normalize_row(r));
  for (const auto& r : b.rows) nb.push_back(normalize_row(r));
  if (a.order_sensitive || b.order_sensitive) return na == nb;
  std::sort(na.begin(), na.end());
  std::sort(nb.begin(), nb.end());
  return na == nb;
}

}  // namespace shieldsql

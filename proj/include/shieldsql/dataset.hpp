#pragma once

// Core domain types shared by every stage: interaction samples, hybrid
// reasoning chains, the reliability scoring table, dataset IO, validation.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "shieldsql/db.hpp"
#include "shieldsql/schema.hpp"
#include "shieldsql/sql/lineage.hpp"

namespace shieldsql {

enum class SafetyLabel { Safe, Unsafe };

inline std::string to_string(SafetyLabel l) { return l == SafetyLabel::Safe ? "safe" : "unsafe"; }
inline SafetyLabel label_from_string(const std::string& s) {
  if (s == "safe") return SafetyLabel::Safe;
  if (s == "unsafe") return SafetyLabel::Unsafe;
  throw std::invalid_argument("unknown safety label: " + s);
}

// The ten interaction patterns. SA is the only safe one.
enum class Pattern { DI, PI, AR, EO, BP, CQ, BE, AI, PT, SA };

inline const std::vector<Pattern>& all_patterns() {
  static const std::vector<Pattern> v = {Pattern::DI, Pattern::PI, Pattern::AR, Pattern::EO,
                                         Pattern::BP, Pattern::CQ, Pattern::BE, Pattern::AI,
                                         Pattern::PT, Pattern::SA};
  return v;
}

inline std::string to_string(Pattern p) {
  switch (p) {
    case Pattern::DI: return "DI";
    case Pattern::PI: return "PI";
    case Pattern::AR: return "AR";
    case Pattern::EO: return "EO";
    case Pattern::BP: return "BP";
    case Pattern::CQ: return "CQ";
    case Pattern::BE: return "BE";
    case Pattern::AI: return "AI";
    case Pattern::PT: return "PT";
    case Pattern::SA: return "SA";
  }
  return "SA";
}

inline Pattern pattern_from_string(const std::string& s) {
  for (Pattern p : all_patterns())
    if (to_string(p) == s) return p;
  throw std::invalid_argument("unknown pattern tag: " + s);
}

struct QueryTurn {
  std::string question;
  std::string sql;
};

// Hybrid reasoning chain attached to a sample's final turn.
struct HCot {
  std::string safety_cot;
  SafetyLabel verdict = SafetyLabel::Safe;
  std::string sql_cot;
  std::string sql;
};

struct InteractionSample {
  std::string id;
  std::string db_ref;
  DatabaseSchema schema;
  std::vector<SecurityConstraint> constraints;
  std::vector<QueryTurn> history;  // 0-2 prior turns at desk scale
  std::string question;
  std::string gold_sql;
  SafetyLabel label = SafetyLabel::Safe;
  Pattern pattern = Pattern::SA;
  std::optional<HCot> hcot;
};

// Case values for the reliability score. r5 covers the (s=0, g=1) case the
// four-way table leaves unlisted.
struct ScoringTable {
  double k1 = -1.0;
  double k2 = -0.5;
  double k3 = -1.0;
  double k4 = -1.0;
  double r5 = 0.0;
};

//===--------------------------------------------------------------------===//
// JSON record form (canonical key order, one record per line)
//===--------------------------------------------------------------------===//

inline ojson to_json(const HCot& h) {
  ojson j;
  j["safety_cot"] = h.safety_cot;
  j["verdict"] = to_string(h.verdict);
  j["sql_cot"] = h.sql_cot;
  j["sql"] = h.sql;
  return j;
}

inline HCot hcot_from_json(const ojson& j) {
  HCot h;
  h.safety_cot = j.at("safety_cot").get<std::string>();
  h.verdict = label_from_string(j.at("verdict").get<std::string>());
  h.sql_cot = j.at("sql_cot").get<std::string>();
  h.sql = j.at("sql").get<std::string>();
  return h;
}

inline ojson to_json(const InteractionSample& s) {
  ojson j;
  j["id"] = s.id;
  j["db_ref"] = s.db_ref;
  j["schema"] = to_json(s.schema);
  j["constraints"] = ojson::array();
  for (const auto& c : s.constraints) j["constraints"].push_back(to_json(c));
  j["history"] = ojson::array();
  for (const auto& t : s.history) {
    ojson jt;
    jt["question"] = t.question;
    jt["sql"] = t.sql;
    j["history"].push_back(jt);
  }
  j["question"] = s.question;
  j["gold_sql"] = s.gold_sql;
  j["label"] = to_string(s.label);
  j["pattern"] = to_string(s.pattern);
  if (s.hcot) j["hcot"] = to_json(*s.hcot);
  return j;
}

inline InteractionSample sample_from_json(const ojson& j) {
  InteractionSample s;
  s.id = j.at("id").get<std::string>();
  s.db_ref = j.at("db_ref").get<std::string>();
  s.schema = schema_from_json(j.at("schema"));
  for (const auto& jc : j.at("constraints")) s.constraints.push_back(constraint_from_json(jc));
  for (const auto& jt : j.at("history"))
    s.history.push_back({jt.at("question").get<std::string>(), jt.at("sql").get<std::string>()});
  s.question = j.at("question").get<std::string>();
  s.gold_sql = j.at("gold_sql").get<std::string>();
  s.label = label_from_string(j.at("label").get<std::string>());
  s.pattern = pattern_from_string(j.at("pattern").get<std::string>());
  if (j.contains("hcot") && !j.at("hcot").is_null()) s.hcot = hcot_from_json(j.at("hcot"));
  return s;
}

inline std::string canonical_record(const InteractionSample& s) { return to_json(s).dump(); }

//===--------------------------------------------------------------------===//
// Dataset IO
//===--------------------------------------------------------------------===//

inline std::vector<InteractionSample> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read dataset: " + path);
  std::vector<InteractionSample> samples;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const std::exception& e) {
      throw IoError("malformed record at line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      samples.push_back(sample_from_json(j));
    } catch (const ojson::out_of_range& e) {
      // nlohmann reports the missing key in the message.
      throw IoError("record at line " + std::to_string(lineno) + " is missing a field: " +
                    e.what());
    } catch (const std::exception& e) {
      throw IoError("invalid record at line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return samples;
}

inline void save_dataset(const std::vector<InteractionSample>& samples, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write dataset: " + path);
  for (const auto& s : samples) out << canonical_record(s) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

//===--------------------------------------------------------------------===//
// External-record adapter
//===--------------------------------------------------------------------===//

// Reads records written with the common alternative field spellings
// (db_id/database, utterance/query pairs, numeric labels, [q, sql] history
// arrays) into the canonical form. Canonical records pass through as-is.
inline InteractionSample import_external_record(const ojson& j) {
  ojson canon = j;
  auto rename = [&canon](const char* from, const char* to) {
    if (canon.contains(from) && !canon.contains(to)) {
      canon[to] = canon.at(from);
      canon.erase(from);
    }
  };
  rename("db_id", "db_ref");
  rename("database", "db_ref");
  rename("utterance", "question");
  rename("query", "gold_sql");
  rename("sql", "gold_sql");
  if (canon.contains("label") && canon.at("label").is_number())
    canon["label"] = canon.at("label").get<int>() == 1 ? "safe" : "unsafe";
  if (canon.contains("history")) {
    ojson fixed = ojson::array();
    for (const auto& turn : canon.at("history")) {
      if (turn.is_array() && turn.size() == 2)
        fixed.push_back({{"question", turn[0]}, {"sql", turn[1]}});
      else
        fixed.push_back(turn);
    }
    canon["history"] = fixed;
  }
  if (!canon.contains("pattern")) {
    canon["pattern"] =
        canon.value("label", "safe") == std::string("safe") ? "SA" : "DI";
  }
  if (!canon.contains("id")) canon["id"] = "imported-" + hex64(fnv1a(canon.dump())).substr(0, 8);
  return sample_from_json(canon);
}

inline std::vector<InteractionSample> import_external_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read dataset: " + path);
  std::vector<InteractionSample> samples;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      samples.push_back(import_external_record(ojson::parse(line)));
    } catch (const std::exception& e) {
      throw IoError("cannot import record at line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return samples;
}

//===--------------------------------------------------------------------===//
// Validation
//===--------------------------------------------------------------------===//

struct ValidationReport {
  std::vector<std::string> violations;
  bool valid() const { return violations.empty(); }
};

// Structural and executable checks for one sample against its database.
// Database connectivity problems surface as IoError, never as violations.
inline ValidationReport validate_sample(const InteractionSample& s, const Database& db) {
  ValidationReport report;
  auto add = [&report](const std::string& v) { report.violations.push_back(v); };

  for (const auto& p : s.schema.check_invariants()) add(p);
  for (const auto& c : s.constraints)
    for (const auto& p : c.check(s.schema)) add(p);

  if ((s.pattern == Pattern::SA) != (s.label == SafetyLabel::Safe))
    add("pattern/label contradiction: pattern " + to_string(s.pattern) + " with label " +
        to_string(s.label));

  if (s.history.size() > 2)
    add("history too long: " + std::to_string(s.history.size()) + " prior turns (max 2)");

  auto check_sql = [&](const std::string& sql_text, const std::string& where) {
    if (trim(sql_text).empty()) {
      add(where + ": empty SQL");
      return false;
    }
    try {
      sql::parse_sql(sql_text);
    } catch (const std::exception& e) {
      add(where + ": unparseable SQL: " + e.what());
      return false;
    }
    try {
      sql::output_lineage(sql_text, s.schema);
    } catch (const AnalysisError& e) {
      add(where + ": unresolved column: " + e.identifier);
      return false;
    }
    return true;
  };

  for (size_t i = 0; i < s.history.size(); ++i)
    check_sql(s.history[i].sql, "history turn " + std::to_string(i + 1));

  if (check_sql(s.gold_sql, "gold SQL")) {
    try {
      execute(db, s.gold_sql);
    } catch (const ExecError& e) {
      add(std::string("gold SQL not executable: ") + e.what());
    }
  }

  if (s.hcot) {
    if (trim(s.hcot->safety_cot).empty()) add("hcot: empty safety_cot");
    if (trim(s.hcot->sql_cot).empty()) add("hcot: empty sql_cot");
    if (trim(s.hcot->sql).empty()) add("hcot: empty sql");
  }
  return report;
}

inline ValidationReport validate_sample(const InteractionSample& s, const std::string& db_path) {
  Database db(db_path);  // IoError when unreachable
  return validate_sample(s, db);
}

}  // namespace shieldsql

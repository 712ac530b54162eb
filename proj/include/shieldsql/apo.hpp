#pragma once

// Preference-pair construction from sampled candidate responses: verify
// against the safety and execution verifiers, partition into chosen and
// rejected with the priority strategy, anchor correct reasoning segments,
// then balance the unilateral error classes.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shieldsql/dataset.hpp"
#include "shieldsql/db.hpp"
#include "shieldsql/response.hpp"

namespace shieldsql {

struct CandidateResponse {
  std::string raw;
  std::optional<HCot> parsed;  // present iff raw matches the grammar

  bool parse_ok() const { return parsed.has_value(); }
};

inline CandidateResponse parse_response(const std::string& text) {
  return CandidateResponse{text, parse_hcot(text)};
}

enum class ErrorClass { BothWrong, SafetyOnly, SqlOnly };

inline std::string to_string(ErrorClass e) {
  switch (e) {
    case ErrorClass::BothWrong: return "both_wrong";
    case ErrorClass::SafetyOnly: return "safety_only";
    case ErrorClass::SqlOnly: return "sql_only";
  }
  return "both_wrong";
}

inline ErrorClass error_class_from_string(const std::string& s) {
  if (s == "both_wrong") return ErrorClass::BothWrong;
  if (s == "safety_only") return ErrorClass::SafetyOnly;
  if (s == "sql_only") return ErrorClass::SqlOnly;
  throw std::invalid_argument("unknown error class: " + s);
}

struct PreferencePair {
  std::string sample_id;
  std::string input;     // serialized (schema & constraints, history, question)
  std::string chosen;    // grammar text, verifies (true, true)
  std::string rejected;  // grammar text, at least one verifier fails
  ErrorClass error_class = ErrorClass::BothWrong;
};

struct VerifyOutcome {
  bool safe_ok = false;
  bool exec_ok = false;

  bool fully_correct() const { return safe_ok && exec_ok; }
  bool both_wrong() const { return !safe_ok && !exec_ok; }
};

// Safety verifier: verdict equals the gold label. Execution verifier: the
// candidate SQL runs and its result is execution-equivalent to the gold
// SQL's. Parse failures fail both.
inline VerifyOutcome verify_candidate(const CandidateResponse& candidate, SafetyLabel gold_label,
                                      const std::string& gold_sql, const Database& db) {
  VerifyOutcome out;
  if (!candidate.parse_ok()) return out;
  out.safe_ok = candidate.parsed->verdict == gold_label;
  try {
    ResultTable gold = execute(db, gold_sql);
    ResultTable got = execute(db, candidate.parsed->sql);
    out.exec_ok = equivalent(got, gold);
  } catch (const std::exception&) {
    out.exec_ok = false;
  }
  return out;
}

// Serialization of the model input x = (D, C, H, Q).
inline std::string serialize_pair_input(const InteractionSample& s) {
  ojson j;
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
  return j.dump();
}

struct BuildPairsOptions {
  bool all_pairs = false;  // default: one pair per sample
};

// Algorithm: chosen = candidates passing both verifiers. Rejected priority:
// (1) both wrong, (2) single error with the correct segment replaced by the
// chosen's corresponding segment, (3) nothing. Samples whose candidates are
// all correct or all wrong are skipped.
inline std::vector<PreferencePair> build_pairs(const InteractionSample& sample,
                                               const std::vector<CandidateResponse>& candidates,
                                               const Database& db,
                                               const BuildPairsOptions& options = {}) {
  std::vector<VerifyOutcome> outcomes;
  outcomes.reserve(candidates.size());
  for (const auto& c : candidates)
    outcomes.push_back(verify_candidate(c, sample.label, sample.gold_sql, db));

  std::vector<size_t> chosen_set, both_wrong_set, single_error_set;
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (outcomes[i].fully_correct())
      chosen_set.push_back(i);
    else if (outcomes[i].both_wrong())
      both_wrong_set.push_back(i);
    else
      single_error_set.push_back(i);
  }

  // Skip: no fully correct candidate, or every candidate correct.
  if (chosen_set.empty() || chosen_set.size() == candidates.size()) return {};

  // First-by-candidate-order chosen anchors all rejected segments.
  size_t chosen_idx = chosen_set.front();
  const HCot& chosen_cot = *candidates[chosen_idx].parsed;
  std::string chosen_text = serialize_hcot(chosen_cot);

  const std::vector<size_t>& tier = !both_wrong_set.empty() ? both_wrong_set : single_error_set;
  if (tier.empty()) return {};

  std::vector<PreferencePair> pairs;
  std::string input = serialize_pair_input(sample);

  auto emit = [&](size_t rejected_idx) {
    const CandidateResponse& rej = candidates[rejected_idx];
    const VerifyOutcome& oc = outcomes[rejected_idx];
    PreferencePair p;
    p.sample_id = sample.id;
    p.input = input;

    if (oc.both_wrong()) {
      p.error_class = ErrorClass::BothWrong;
      // Unparseable candidates count as wrong on both axes; keep raw text.
      p.rejected = rej.parse_ok() ? serialize_hcot(*rej.parsed) : rej.raw;
    } else if (!oc.safe_ok) {
      // Safety wrong, SQL right: anchor the correct SQL side to the chosen.
      p.error_class = ErrorClass::SafetyOnly;
      HCot anchored = *rej.parsed;
      anchored.sql_cot = chosen_cot.sql_cot;
      anchored.sql = chosen_cot.sql;
      p.rejected = serialize_hcot(anchored);
    } else {
      // SQL wrong, safety right: anchor the correct safety side.
      p.error_class = ErrorClass::SqlOnly;
      HCot anchored = *rej.parsed;
      anchored.safety_cot = chosen_cot.safety_cot;
      anchored.verdict = chosen_cot.verdict;
      p.rejected = serialize_hcot(anchored);
    }
    p.chosen = chosen_text;
    if (p.rejected == p.chosen) return;  // degenerate pair, skip
    pairs.push_back(std::move(p));
  };

  if (options.all_pairs) {
    for (size_t idx : tier) emit(idx);
  } else {
    emit(tier.front());
  }
  return pairs;
}

// Clause-count difficulty heuristic for the optional stratifier and reports.
inline int sql_difficulty(const std::string& sql_text) {
  static const char* markers[] = {" where ", " join ",  " group by ", " order by ",
                                  " having ", " limit ", " union ",   " intersect ",
                                  " except ", "(select "};
  std::string norm = " " + normalize_for_match(sql_text) + " ";
  int score = 0;
  for (const char* m : markers) {
    size_t from = 0;
    while ((from = norm.find(m, from)) != std::string::npos) {
      ++score;
      ++from;
    }
  }
  return score;
}

namespace detail {

inline int pair_difficulty_bucket(const PreferencePair& p) {
  auto chosen = parse_hcot(p.chosen);
  int d = chosen ? sql_difficulty(chosen->sql) : 0;
  return std::min(d, 3);
}

// Downsamples each difficulty bucket to the smallest nonempty bucket so the
// histogram is approximately uniform. Deterministic given rng.
inline std::vector<PreferencePair> stratify_by_difficulty(std::vector<PreferencePair> pairs,
                                                          Rng& rng) {
  std::map<int, std::vector<size_t>> buckets;
  for (size_t i = 0; i < pairs.size(); ++i) buckets[pair_difficulty_bucket(pairs[i])].push_back(i);
  size_t target = SIZE_MAX;
  for (const auto& [d, idx] : buckets) target = std::min(target, idx.size());
  std::vector<bool> keep(pairs.size(), false);
  for (auto& [d, idx] : buckets) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (size_t k = 0; k < target; ++k) keep[idx[k]] = true;
  }
  std::vector<PreferencePair> out;
  for (size_t i = 0; i < pairs.size(); ++i)
    if (keep[i]) out.push_back(std::move(pairs[i]));
  return out;
}

}  // namespace detail

// Downsamples so both unilateral error classes appear equally often;
// both-wrong pairs are exempt from the quota. The optional stratifier first
// flattens the SQL-difficulty histogram. Deterministic given rng.
inline std::vector<PreferencePair> balance_pairs(std::vector<PreferencePair> pairs, Rng& rng,
                                                 bool stratify_difficulty = false) {
  if (stratify_difficulty) pairs = detail::stratify_by_difficulty(std::move(pairs), rng);
  std::vector<size_t> safety_only, sql_only;
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].error_class == ErrorClass::SafetyOnly) safety_only.push_back(i);
    if (pairs[i].error_class == ErrorClass::SqlOnly) sql_only.push_back(i);
  }
  size_t quota = std::min(safety_only.size(), sql_only.size());

  auto sample_down = [&rng, quota](std::vector<size_t>& indices) {
    std::shuffle(indices.begin(), indices.end(), rng);
    indices.resize(quota);
  };
  sample_down(safety_only);
  sample_down(sql_only);

  std::vector<bool> keep(pairs.size(), false);
  for (size_t i = 0; i < pairs.size(); ++i)
    if (pairs[i].error_class == ErrorClass::BothWrong) keep[i] = true;
  for (size_t i : safety_only) keep[i] = true;
  for (size_t i : sql_only) keep[i] = true;

  std::vector<PreferencePair> out;
  out.reserve(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i)
    if (keep[i]) out.push_back(std::move(pairs[i]));
  return out;
}

//===--------------------------------------------------------------------===//
// Preference file IO (one record per line)
//===--------------------------------------------------------------------===//

inline ojson to_json(const PreferencePair& p) {
  ojson j;
  j["sample_id"] = p.sample_id;
  j["input"] = p.input;
  j["chosen"] = p.chosen;
  j["rejected"] = p.rejected;
  j["error_class"] = to_string(p.error_class);
  return j;
}

inline PreferencePair pair_from_json(const ojson& j) {
  PreferencePair p;
  p.sample_id = j.value("sample_id", "");
  p.input = j.at("input").get<std::string>();
  p.chosen = j.at("chosen").get<std::string>();
  p.rejected = j.at("rejected").get<std::string>();
  p.error_class = error_class_from_string(j.at("error_class").get<std::string>());
  return p;
}

inline void save_pairs(const std::vector<PreferencePair>& pairs, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write preference file: " + path);
  for (const auto& p : pairs) out << to_json(p).dump() << '\n';
}

inline std::vector<PreferencePair> load_pairs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read preference file: " + path);
  std::vector<PreferencePair> pairs;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      pairs.push_back(pair_from_json(ojson::parse(line)));
    } catch (const std::exception& e) {
      throw IoError("malformed preference record at line " + std::to_string(lineno) + ": " +
                    e.what());
    }
  }
  return pairs;
}

}  // namespace shieldsql

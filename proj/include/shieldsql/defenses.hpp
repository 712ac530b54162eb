#pragma once

// Defense baselines: sensitive-query detection (proactive), static syntactic
// analysis and dynamic execution monitoring (post-hoc), Laplace perturbation,
// and the LLM guard agent.

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "shieldsql/dataset.hpp"
#include "shieldsql/db.hpp"
#include "shieldsql/llm.hpp"
#include "shieldsql/prompts.hpp"
#include "shieldsql/response.hpp"
#include "shieldsql/sql/lineage.hpp"
#include "shieldsql/sql/pattern_match.hpp"

namespace shieldsql {

enum class DefenseMethod { SQD, SSA, DEM, GUARD, DP };

inline std::string to_string(DefenseMethod m) {
  switch (m) {
    case DefenseMethod::SQD: return "SQD";
    case DefenseMethod::SSA: return "SSA";
    case DefenseMethod::DEM: return "DEM";
    case DefenseMethod::GUARD: return "GUARD";
    case DefenseMethod::DP: return "DP";
  }
  return "SQD";
}

inline DefenseMethod defense_from_string(const std::string& s) {
  std::string u = to_lower(s);
  if (u == "sqd") return DefenseMethod::SQD;
  if (u == "ssa") return DefenseMethod::SSA;
  if (u == "dem") return DefenseMethod::DEM;
  if (u == "guard") return DefenseMethod::GUARD;
  if (u == "dp") return DefenseMethod::DP;
  throw std::invalid_argument("unknown defense method: " + s);
}

struct DefenseVerdict {
  enum class Decision { Allow, Reject } decision = Decision::Allow;
  DefenseMethod method = DefenseMethod::SQD;
  // (matched pattern or column, location such as "query 2" or "token age")
  std::vector<std::pair<std::string, std::string>> evidence;
  std::optional<double> score;  // max similarity for SQD

  bool rejected() const { return decision == Decision::Reject; }
};

//===--------------------------------------------------------------------===//
// SQD: proactive question screening
//===--------------------------------------------------------------------===//

inline const std::set<std::string>& default_stopwords() {
  static const std::set<std::string> words = {
      "a",    "an",   "and",  "are",  "as",    "at",    "be",    "by",   "can",  "do",
      "does", "for",  "from", "get",  "give",  "has",   "have",  "how",  "i",    "in",
      "is",   "it",   "its",  "list", "many",  "me",    "much",  "my",   "of",   "on",
      "or",   "per",  "show", "tell", "that",  "the",   "their", "them", "then", "there",
      "this", "to",   "us",   "was",  "we",    "what",  "when",  "where", "which", "who",
      "whose", "why", "will", "with", "would", "you",   "your",  "all",  "any",  "each"};
  return words;
}

inline std::set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) return default_stopwords();
  std::set<std::string> words;
  std::string w;
  while (in >> w) words.insert(to_lower(w));
  return words;
}

namespace detail {

// One-pass suffix strip; stems stay at least three characters long.
inline std::string stem(const std::string& token) {
  static const char* suffixes[] = {"ingly", "edly", "ings", "ing", "ied", "ies",
                                   "ed",    "es",   "ly",   "s"};
  for (const char* suf : suffixes) {
    size_t n = std::string(suf).size();
    if (token.size() > n + 2 && token.compare(token.size() - n, n, suf) == 0)
      return token.substr(0, token.size() - n);
  }
  return token;
}

// Word segmentation on non-alphanumerics, stopword removal, stemming.
inline std::vector<std::string> question_terms(const std::string& question,
                                               const std::set<std::string>& stopwords) {
  std::vector<std::string> terms;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    std::string t = to_lower(current);
    current.clear();
    if (stopwords.count(t)) return;
    terms.push_back(stem(t));
  };
  for (char c : question) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_')
      current.push_back(c);
    else
      flush();
  }
  flush();
  return terms;
}

}  // namespace detail

// Rejects when any question term is semantically closer than tau to any
// sensitive pattern. Terms and patterns are embedded in one call so the
// similarity space is shared.
inline DefenseVerdict sqd(const std::string& question, const DatabaseSchema& schema,
                          const std::vector<SecurityConstraint>& constraints, double tau,
                          const Embedder& embedder,
                          const std::set<std::string>& stopwords = default_stopwords()) {
  if (tau <= 0 || tau > 1) throw std::invalid_argument("sqd: tau must be in (0, 1]");
  DefenseVerdict v;
  v.method = DefenseMethod::SQD;

  SensitivePatternSet s = build_sensitive_set(schema, constraints);
  std::vector<std::string> terms = detail::question_terms(question, stopwords);
  if (s.empty() || terms.empty()) return v;  // allow

  std::vector<std::string> batch = terms;
  std::vector<std::string> patterns(s.patterns.begin(), s.patterns.end());
  batch.insert(batch.end(), patterns.begin(), patterns.end());
  auto vectors = embedder(batch);

  double best = -1.0;
  for (size_t i = 0; i < terms.size(); ++i) {
    for (size_t j = 0; j < patterns.size(); ++j) {
      double sim = cosine(vectors[i], vectors[terms.size() + j]);
      if (sim > best) best = sim;
      if (sim > tau) {
        v.decision = DefenseVerdict::Decision::Reject;
        v.evidence.emplace_back(patterns[j], "token " + terms[i]);
      }
    }
  }
  v.score = best < 0 ? 0.0 : best;
  return v;
}

//===--------------------------------------------------------------------===//
// SSA: static syntactic analysis over the SQL set
//===--------------------------------------------------------------------===//

// Longest-string matching over every query text (history + current = the
// analyzed set). Any hit rejects.
inline DefenseVerdict ssa(const std::vector<std::string>& sql_set,
                          const SensitivePatternSet& patterns) {
  DefenseVerdict v;
  v.method = DefenseMethod::SSA;
  for (size_t i = 0; i < sql_set.size(); ++i) {
    for (const auto& m : longest_pattern_match(sql_set[i], patterns)) {
      v.decision = DefenseVerdict::Decision::Reject;
      v.evidence.emplace_back(m.pattern, "query " + std::to_string(i + 1));
    }
  }
  return v;
}

//===--------------------------------------------------------------------===//
// DEM: dynamic execution monitoring
//===--------------------------------------------------------------------===//

// Executes every query; rejects when an executed query's output lineage
// touches a sensitive column or a result cell equals a sensitive value.
// Queries that fail to run are skipped with an evidence note.
inline DefenseVerdict dem(const std::vector<std::string>& sql_set,
                          const SensitivePatternSet& patterns, const Database& db) {
  DefenseVerdict v;
  v.method = DefenseMethod::DEM;
  DatabaseSchema schema = introspect_schema(db);

  for (size_t i = 0; i < sql_set.size(); ++i) {
    std::string loc = "query " + std::to_string(i + 1);
    ResultTable result;
    try {
      result = execute(db, sql_set[i]);
    } catch (const std::exception& e) {
      v.evidence.emplace_back("skipped: " + std::string(e.what()), loc);
      continue;
    }

    try {
      auto lineage = sql::output_lineage(sql_set[i], schema);
      for (const auto& col : lineage.output_columns)
        if (patterns.column_patterns.count(to_lower(col.column))) {
          v.decision = DefenseVerdict::Decision::Reject;
          v.evidence.emplace_back(col.str(), loc);
        }
    } catch (const std::exception& e) {
      v.evidence.emplace_back("lineage unavailable: " + std::string(e.what()), loc);
    }

    if (!patterns.value_patterns.empty()) {
      auto cell_text = [](const Cell& cell) -> std::optional<std::string> {
        if (std::holds_alternative<std::string>(cell))
          return to_lower(std::get<std::string>(cell));
        if (std::holds_alternative<int64_t>(cell))
          return std::to_string(std::get<int64_t>(cell));
        if (std::holds_alternative<double>(cell)) {
          char buf[40];
          std::snprintf(buf, sizeof(buf), "%.10g", std::get<double>(cell));
          return std::string(buf);
        }
        return std::nullopt;  // null never equals a value pattern
      };
      for (const auto& row : result.rows)
        for (const auto& cell : row) {
          auto text = cell_text(cell);
          if (text && patterns.value_patterns.count(*text)) {
            v.decision = DefenseVerdict::Decision::Reject;
            v.evidence.emplace_back(*text, loc);
          }
        }
    }
  }
  return v;
}

//===--------------------------------------------------------------------===//
// DP: Laplace perturbation of query results
//===--------------------------------------------------------------------===//

// Inverse-CDF Laplace(0, scale) sample from raw 53-bit uniform draws; avoids
// distribution-object differences across standard libraries.
inline double laplace_noise(Rng& rng, double scale) {
  double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);  // [0,1)
  double centered = u - 0.5;
  double sign = centered < 0 ? -1.0 : 1.0;
  double mag = std::abs(centered);
  if (mag >= 0.5) mag = std::nextafter(0.5, 0.0);  // guard log(0)
  return -scale * sign * std::log(1.0 - 2.0 * mag);
}

// Adds independent Laplace(0, sensitivity/epsilon) noise to every numeric
// cell. Non-numeric and null cells pass through. Deterministic given rng.
inline ResultTable dp_perturb(const ResultTable& result, double epsilon, double sensitivity,
                              Rng& rng) {
  if (epsilon <= 0) throw std::invalid_argument("dp_perturb: epsilon must be > 0");
  if (sensitivity <= 0) throw std::invalid_argument("dp_perturb: sensitivity must be > 0");
  double scale = sensitivity / epsilon;
  ResultTable out = result;
  for (auto& row : out.rows)
    for (auto& cell : row) {
      if (std::holds_alternative<int64_t>(cell))
        cell = static_cast<double>(std::get<int64_t>(cell)) + laplace_noise(rng, scale);
      else if (std::holds_alternative<double>(cell))
        cell = std::get<double>(cell) + laplace_noise(rng, scale);
    }
  return out;
}

//===--------------------------------------------------------------------===//
// Guard: auxiliary LLM reviewer
//===--------------------------------------------------------------------===//

// Prompts the client with the full context and the SQL under review, then
// reads the verdict from the tagged response. Unparseable output rejects
// (fail-closed).
inline DefenseVerdict guard(const InteractionSample& sample, const std::string& predicted_sql,
                            ChatClient& client,
                            const PromptLibrary& prompts = PromptLibrary::defaults()) {
  DefenseVerdict v;
  v.method = DefenseMethod::GUARD;

  std::string history;
  for (size_t i = 0; i < sample.history.size(); ++i)
    history += std::to_string(i + 1) + ". Q: " + sample.history[i].question +
               "\n   SQL: " + sample.history[i].sql + "\n";
  std::string constraints;
  for (const auto& c : sample.constraints) constraints += "- " + c.description + "\n";

  std::string prompt = prompts.render("guard", {
      {"schema", to_json(sample.schema).dump()},
      {"constraints", constraints},
      {"history", history},
      {"question", sample.question},
      {"sql", predicted_sql},
  });

  SamplingParams params;
  params.n = 1;
  params.temperature = 0.0;
  auto replies = client.complete_n(prompt, params);
  auto parsed = replies.empty() ? std::nullopt : parse_hcot(replies.front());
  if (!parsed) {
    v.decision = DefenseVerdict::Decision::Reject;
    v.evidence.emplace_back("unparseable", "response");
    return v;
  }
  if (parsed->verdict == SafetyLabel::Unsafe) {
    v.decision = DefenseVerdict::Decision::Reject;
    v.evidence.emplace_back("verdict unsafe", "response");
  }
  return v;
}

}  // namespace shieldsql

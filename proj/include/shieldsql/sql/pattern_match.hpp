#pragma once

// Sensitive-pattern extraction from constraints and the longest-string
// matcher shared by the SSA/DEM defenses and the leakage screen.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "shieldsql/schema.hpp"

namespace shieldsql {

struct SensitivePatternSet {
  std::set<std::string> patterns;              // case-folded
  std::map<std::string, std::string> origin;   // pattern -> constraint id
  std::set<std::string> column_patterns;       // subset: bare column names
  std::set<std::string> value_patterns;        // subset: qualification literals

  bool empty() const { return patterns.empty(); }
};

// Each target-field column name and each qualification literal becomes a
// pattern (case-folded). Empty constraint list yields an empty set.
inline SensitivePatternSet build_sensitive_set(const DatabaseSchema& /*schema*/,
                                               const std::vector<SecurityConstraint>& constraints) {
  SensitivePatternSet s;
  auto add = [&s](const std::string& raw, const std::string& cid, bool is_column) {
    std::string p = to_lower(raw);
    if (p.empty()) return;
    s.patterns.insert(p);
    s.origin.emplace(p, cid);
    if (is_column)
      s.column_patterns.insert(p);
    else
      s.value_patterns.insert(p);
  };
  for (const auto& c : constraints) {
    for (const auto& tf : c.target_fields) add(tf.column, c.id, true);
    if (c.qualification && qual_op_takes_literal(c.qualification->op))
      add(c.qualification->literal, c.id, false);
  }
  return s;
}

struct PatternMatch {
  std::string pattern;  // case-folded pattern
  size_t offset = 0;    // start offset in the normalized text
  size_t length = 0;

  bool operator==(const PatternMatch& o) const {
    return pattern == o.pattern && offset == o.offset && length == o.length;
  }
};

// Case-insensitive substring matching on normalized text (whitespace
// collapsed, quotes stripped). Where several patterns start at the same
// offset only the longest survives. Results ordered by (offset, -length).
inline std::vector<PatternMatch> longest_pattern_match(std::string_view text,
                                                       const SensitivePatternSet& set) {
  std::string norm = normalize_for_match(text);
  std::map<size_t, PatternMatch> best_at;  // start offset -> longest match
  for (const auto& p : set.patterns) {
    size_t from = 0;
    while (true) {
      size_t at = norm.find(p, from);
      if (at == std::string::npos) break;
      auto it = best_at.find(at);
      if (it == best_at.end() || it->second.length < p.size())
        best_at[at] = {p, at, p.size()};
      from = at + 1;
    }
  }
  std::vector<PatternMatch> out;
  out.reserve(best_at.size());
  for (auto& [off, m] : best_at) out.push_back(std::move(m));
  return out;  // std::map iterates by offset; one entry per offset
}

}  // namespace shieldsql

#pragma once

// The tagged response grammar, bit-exact:
//   <safety_analysis>...</safety_analysis><verdict>safe|unsafe</verdict>
//   <sql_analysis>...</sql_analysis><sql>...</sql>
// Section order is part of the grammar; each tag appears exactly once.

#include <optional>
#include <string>

#include "shieldsql/dataset.hpp"

namespace shieldsql {

inline std::string serialize_hcot(const HCot& h) {
  return "<safety_analysis>" + h.safety_cot + "</safety_analysis><verdict>" +
         to_string(h.verdict) + "</verdict><sql_analysis>" + h.sql_cot + "</sql_analysis><sql>" +
         h.sql + "</sql>";
}

namespace detail {

// Consumes one <tag>...</tag> section starting at pos (whitespace allowed
// before the tag). Fails if the open tag is not next or the close is absent.
inline std::optional<std::string> take_section(const std::string& text, const std::string& tag,
                                               size_t& pos) {
  std::string open = "<" + tag + ">";
  std::string close = "</" + tag + ">";
  size_t start = text.find_first_not_of(" \t\r\n", pos);
  if (start == std::string::npos || text.compare(start, open.size(), open) != 0)
    return std::nullopt;
  size_t body_start = start + open.size();
  size_t end = text.find(close, body_start);
  if (end == std::string::npos) return std::nullopt;
  pos = end + close.size();
  return text.substr(body_start, end - body_start);
}

}  // namespace detail

// Parses a full grammar instance. Returns nullopt on any deviation: missing
// or duplicated tags, wrong order, junk between sections, bad verdict.
inline std::optional<HCot> parse_hcot(const std::string& text) {
  size_t pos = 0;
  auto safety = detail::take_section(text, "safety_analysis", pos);
  if (!safety) return std::nullopt;
  auto verdict = detail::take_section(text, "verdict", pos);
  if (!verdict) return std::nullopt;
  auto sql_analysis = detail::take_section(text, "sql_analysis", pos);
  if (!sql_analysis) return std::nullopt;
  auto sql_text = detail::take_section(text, "sql", pos);
  if (!sql_text) return std::nullopt;
  if (text.find_first_not_of(" \t\r\n", pos) != std::string::npos) return std::nullopt;

  HCot h;
  h.safety_cot = *safety;
  std::string v = trim(*verdict);
  if (v == "safe")
    h.verdict = SafetyLabel::Safe;
  else if (v == "unsafe")
    h.verdict = SafetyLabel::Unsafe;
  else
    return std::nullopt;
  h.sql_cot = *sql_analysis;
  h.sql = *sql_text;
  return h;
}

}  // namespace shieldsql

#pragma once

// Shared small utilities: string normalization, hashing, errors, RNG alias.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace shieldsql {

// Deterministic RNG used everywhere a seed appears in a contract.
using Rng = std::mt19937_64;

//===--------------------------------------------------------------------===//
// Errors
//===--------------------------------------------------------------------===//

// Input could not be read/written (distinct from validation failures).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// SQL text is not a well-formed statement in the supported dialect.
struct SqlSyntaxError : std::runtime_error {
  size_t offset;  // byte offset into the original text
  SqlSyntaxError(const std::string& msg, size_t off)
      : std::runtime_error(msg + " (at byte " + std::to_string(off) + ")"), offset(off) {}
};

// Statement parses but is not a SELECT-form query.
struct UnsupportedStatementError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Identifier resolution or lineage failure; carries the offending name.
struct AnalysisError : std::runtime_error {
  std::string identifier;
  AnalysisError(const std::string& msg, std::string ident)
      : std::runtime_error(msg), identifier(std::move(ident)) {}
};

// Database engine failures (bad column, busy, ...).
struct ExecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TimeoutError : ExecError {
  using ExecError::ExecError;
};

// A synthesis step had no viable output for this input (callers skip the item).
struct SynthesisSkip : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Pattern cannot be instantiated on this schema (e.g. no numeric column).
struct PatternInapplicable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//===--------------------------------------------------------------------===//
// Strings
//===--------------------------------------------------------------------===//

inline char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
  return out;
}

inline bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (ascii_lower(a[i]) != ascii_lower(b[i])) return false;
  return true;
}

inline std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string rstrip(std::string_view s) {
  size_t e = s.size();
  while (e > 0 && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(0, e));
}

// Collapses whitespace runs to a single space, strips quote characters and
// lowercases. This is the normal form shared by the string-matching defenses.
inline std::string normalize_for_match(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_ws = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_ws = true;
      continue;
    }
    if (c == '\'' || c == '"' || c == '`') continue;
    if (in_ws && !out.empty()) out.push_back(' ');
    in_ws = false;
    out.push_back(ascii_lower(c));
  }
  return out;
}

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  size_t start = 0;
  while (start <= text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.emplace_back(text.substr(start));
      break;
    }
    lines.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

//===--------------------------------------------------------------------===//
// Hashing (FNV-1a, stable across platforms; used for cache keys and digests)
//===--------------------------------------------------------------------===//

inline uint64_t fnv1a(std::string_view data, uint64_t seed = 0xcbf29ce484222325ull) {
  uint64_t h = seed;
  for (unsigned char c : std::string_view(data)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace shieldsql

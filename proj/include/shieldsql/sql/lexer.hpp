#pragma once

// Tokenizer for the supported SELECT dialect. Every token carries its byte
// offset so syntax errors can point into the original text.

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "shieldsql/common.hpp"

namespace shieldsql::sql {

enum class TokenKind {
  Ident,       // bare or quoted identifier
  Number,      // integer or real literal
  String,      // 'single quoted'
  Punct,       // operators and punctuation
  End,
};

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;   // identifier/keyword text, literal text, or operator
  size_t offset = 0;  // byte offset into the source
  bool quoted = false;  // identifier was quoted ("x", `x`, [x])

  bool is_keyword(std::string_view kw) const {
    return kind == TokenKind::Ident && !quoted && iequals(text, kw);
  }
  bool is_punct(std::string_view p) const { return kind == TokenKind::Punct && text == p; }
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> tokenize() {
    std::vector<Token> out;
    while (true) {
      skip_space_and_comments();
      if (pos_ >= src_.size()) break;
      out.push_back(next_token());
    }
    out.push_back({TokenKind::End, "", src_.size(), false});
    return out;
  }

 private:
  std::string_view src_;
  size_t pos_ = 0;

  char peek(size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  void skip_space_and_comments() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '-' && peek(1) == '-') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == '/' && peek(1) == '*') {
        size_t start = pos_;
        pos_ += 2;
        while (pos_ + 1 < src_.size() && !(src_[pos_] == '*' && src_[pos_ + 1] == '/')) ++pos_;
        if (pos_ + 1 >= src_.size()) throw SqlSyntaxError("unterminated block comment", start);
        pos_ += 2;
      } else {
        break;
      }
    }
  }

  Token next_token() {
    size_t start = pos_;
    char c = src_[pos_];

    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      return {TokenKind::Ident, std::string(src_.substr(start, pos_ - start)), start, false};
    }

    if (c == '"' || c == '`' || c == '[') {
      char close = (c == '[') ? ']' : c;
      ++pos_;
      std::string name;
      while (pos_ < src_.size() && src_[pos_] != close) name.push_back(src_[pos_++]);
      if (pos_ >= src_.size()) throw SqlSyntaxError("unterminated quoted identifier", start);
      ++pos_;
      return {TokenKind::Ident, name, start, true};
    }

    if (c == '\'') {
      ++pos_;
      std::string value;
      while (pos_ < src_.size()) {
        if (src_[pos_] == '\'') {
          if (peek(1) == '\'') {  // '' escape
            value.push_back('\'');
            pos_ += 2;
            continue;
          }
          ++pos_;
          return {TokenKind::String, value, start, false};
        }
        value.push_back(src_[pos_++]);
      }
      throw SqlSyntaxError("unterminated string literal", start);
    }

    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      bool seen_dot = false, seen_exp = false;
      while (pos_ < src_.size()) {
        char d = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(d))) {
          ++pos_;
        } else if (d == '.' && !seen_dot && !seen_exp) {
          seen_dot = true;
          ++pos_;
        } else if ((d == 'e' || d == 'E') && !seen_exp &&
                   (std::isdigit(static_cast<unsigned char>(peek(1))) ||
                    ((peek(1) == '+' || peek(1) == '-') &&
                     std::isdigit(static_cast<unsigned char>(peek(2)))))) {
          seen_exp = true;
          pos_ += (peek(1) == '+' || peek(1) == '-') ? 2 : 1;
        } else {
          break;
        }
      }
      return {TokenKind::Number, std::string(src_.substr(start, pos_ - start)), start, false};
    }

    // Multi-char operators first.
    static const char* two_char[] = {"<=", ">=", "<>", "!=", "==", "||"};
    for (const char* op : two_char) {
      if (c == op[0] && peek(1) == op[1]) {
        pos_ += 2;
        return {TokenKind::Punct, op, start, false};
      }
    }
    static const std::string singles = "(),.;*+-/%<>=";
    if (singles.find(c) != std::string::npos) {
      ++pos_;
      return {TokenKind::Punct, std::string(1, c), start, false};
    }

    throw SqlSyntaxError(std::string("unexpected character '") + c + "'", start);
  }
};

}  // namespace shieldsql::sql

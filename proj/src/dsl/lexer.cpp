/*
 Copyright 2026 The octrans Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "octrans/dsl/lexer.hpp"

#include <cctype>
#include <charconv>
#include <unordered_set>

#include "octrans/dsl/ast.hpp"

namespace octrans::dsl {

namespace {

const std::unordered_set<std::string_view> kKeywords = {
    "in", "time", "state", "control", "variable", "min", "max",
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

}  // namespace

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  const size_t n = src.size();

  auto push = [&](TokenKind k, std::string text, int tcol, double num = 0.0) {
    out.push_back(Token{k, std::move(text), line, tcol, num});
  };

  while (i < n) {
    char c = src[i];
    if (c == '\n') {
      push(TokenKind::newline, "\n", col);
      ++i;
      ++line;
      col = 1;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      ++col;
      continue;
    }
    if (c == '#') {  // comment to end of line
      while (i < n && src[i] != '\n') ++i;
      continue;
    }
    const int tcol = col;
    if (ident_start(c)) {
      size_t j = i;
      while (j < n && ident_char(src[j])) ++j;
      std::string text(src.substr(i, j - i));
      col += static_cast<int>(j - i);
      i = j;
      TokenKind kind = kKeywords.count(text) ? TokenKind::keyword : TokenKind::ident;
      push(kind, std::move(text), tcol);
      continue;
    }
    if (digit(c) || (c == '.' && i + 1 < n && digit(src[i + 1]))) {
      size_t j = i;
      bool is_float = false;
      while (j < n && digit(src[j])) ++j;
      if (j < n && src[j] == '.' && j + 1 < n && digit(src[j + 1])) {
        is_float = true;
        ++j;
        while (j < n && digit(src[j])) ++j;
      } else if (j < n && src[j] == '.' && !(j + 1 < n && ident_start(src[j + 1]))) {
        // trailing dot as in "1." (but "2.x" stays an error below)
        is_float = true;
        ++j;
      }
      // exponent only when followed by digits (so "2e" lexes as 2 * e)
      if (j < n && (src[j] == 'e' || src[j] == 'E')) {
        size_t k = j + 1;
        if (k < n && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < n && digit(src[k])) {
          is_float = true;
          ++k;
          while (k < n && digit(src[k])) ++k;
          j = k;
        }
      }
      std::string text(src.substr(i, j - i));
      double v = 0.0;
      auto res = std::from_chars(text.data(), text.data() + text.size(), v);
      if (res.ec != std::errc()) throw ParseError(line, "malformed number '" + text + "'");
      col += static_cast<int>(j - i);
      i = j;
      push(is_float ? TokenKind::float_lit : TokenKind::int_lit, std::move(text), tcol, v);
      continue;
    }
    auto two = (i + 1 < n) ? src.substr(i, 2) : std::string_view{};
    if (two == "<=" || two == ">=" || two == "==" || two == "=>") {
      push(TokenKind::op, std::string(two), tcol);
      i += 2;
      col += 2;
      continue;
    }
    switch (c) {
      case '+': case '-': case '*': case '/': case '^': case '<': case '>': case '=':
        push(TokenKind::op, std::string(1, c), tcol);
        break;
      case ',': push(TokenKind::comma, ",", tcol); break;
      case '(': push(TokenKind::lparen, "(", tcol); break;
      case ')': push(TokenKind::rparen, ")", tcol); break;
      case '[': push(TokenKind::lbracket, "[", tcol); break;
      case ']': push(TokenKind::rbracket, "]", tcol); break;
      default:
        throw ParseError(line, std::string("illegal character '") + c + "' at column " + std::to_string(tcol));
    }
    ++i;
    ++col;
  }
  push(TokenKind::end, "", col);
  return out;
}

}  // namespace octrans::dsl

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

#ifndef OCTRANS_DSL_LEXER_HPP_
#define OCTRANS_DSL_LEXER_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace octrans::dsl {

enum class TokenKind {
  ident,
  keyword,  // in, time, state, control, variable, min, max
  int_lit,
  float_lit,
  op,  // + - * / ^ < > <= >= == => =
  comma,
  lparen,
  rparen,
  lbracket,
  rbracket,
  newline,
  end,
};

struct Token {
  TokenKind kind;
  std::string text;
  int line = 1;  // 1-based
  int col = 1;
  double num = 0.0;  // int_lit / float_lit value
};

/** Tokenize DSL source. Comments (`#` to end of line) are stripped; every
 * physical line ends with a `newline` token so the parser stays
 * line-oriented. Throws ParseError on illegal characters.
 */
std::vector<Token> tokenize(std::string_view source);

}  // namespace octrans::dsl

#endif  // OCTRANS_DSL_LEXER_HPP_

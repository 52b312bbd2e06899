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

#ifndef OCTRANS_DSL_PARSER_HPP_
#define OCTRANS_DSL_PARSER_HPP_

#include <string_view>

#include "octrans/dsl/ast.hpp"

namespace octrans::dsl {

/** Parse and validate a complete problem description.
 *
 * Throws ParseError (with a 1-based source line) on lexical, syntactic, or
 * semantic failure. On success every reference in the returned problem is
 * resolved to declaration/component indices and all dimension checks have
 * passed.
 */
OcpProblem parse_ocp(std::string_view source);

}  // namespace octrans::dsl

#endif  // OCTRANS_DSL_PARSER_HPP_

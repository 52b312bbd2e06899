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

#ifndef OCTRANS_DSL_PRINTER_HPP_
#define OCTRANS_DSL_PRINTER_HPP_

#include <string>

#include "octrans/dsl/ast.hpp"

namespace octrans::dsl {

/// Canonical DSL text; parse_ocp(pretty_print(p)) is structurally equal to p.
std::string pretty_print(const OcpProblem& p);

/// One expression in canonical (fully parenthesized where needed) form.
std::string print_expr(const OcpProblem& p, const ExprPtr& e);

/// Shortest round-trip decimal representation of a double.
std::string format_number(double v);

}  // namespace octrans::dsl

#endif  // OCTRANS_DSL_PRINTER_HPP_

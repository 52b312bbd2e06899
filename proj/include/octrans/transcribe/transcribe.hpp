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

#ifndef OCTRANS_TRANSCRIBE_TRANSCRIBE_HPP_
#define OCTRANS_TRANSCRIBE_TRANSCRIBE_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "octrans/transcribe/nlp.hpp"

namespace octrans::transcribe {

/** Start-value policy: scalar defaults per declaration kind, optionally
 * overridden per declaration with one value per component.
 */
struct InitPolicy {
  double variable = 0.1;
  double state = 0.1;
  double control = 0.1;
  std::map<std::string, std::vector<double>> per_decl;
};

/** Discretize `p` on an N-step uniform grid.
 *
 * Dynamics become one equality-row group per state component over steps
 * 0..N-1, boundary constraints become single-index groups, path constraints
 * become vectorized row groups over nodes 0..N (euler control-only: 0..N-1),
 * and bounds on free variables land in lvar/uvar. A free horizon substitutes
 * h = (tf - t0)/N symbolically into every residual and quadrature weight.
 *
 * Throws std::invalid_argument for N < 1 and dsl::ParseError-style
 * std::runtime_error for unsupported constructs.
 */
struct TranscribeOptions {
  InitPolicy init;
  // when set, single-slot path bounds become lvar/uvar instead of rows
  bool boxes_as_bounds = false;
};

StructuredNlp transcribe(const dsl::OcpProblem& p, Scheme scheme, Index N,
                         const InitPolicy& init = {});
StructuredNlp transcribe(const dsl::OcpProblem& p, Scheme scheme, Index N,
                         const TranscribeOptions& opts);

/// Refill x_start from a policy (values are clipped into [lvar, uvar]).
void initial_point(StructuredNlp& nlp, const dsl::OcpProblem& p, const InitPolicy& init);

}  // namespace octrans::transcribe

#endif  // OCTRANS_TRANSCRIBE_TRANSCRIBE_HPP_

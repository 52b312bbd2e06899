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

#ifndef OCTRANS_IPM_SOLVER_HPP_
#define OCTRANS_IPM_SOLVER_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "octrans/backend/backend.hpp"
#include "octrans/transcribe/nlp.hpp"

namespace octrans::ipm {

using kernel::Index;

struct IpmOptions {
  double tol = 1e-8;
  int max_iter = 3000;
  double mu_init = 1e-1;
  double tau_min = 0.99;  // fraction-to-boundary floor; tau = max(tau_min, 1 - mu)

  // inertia-corrected regularization schedule
  struct Regularization {
    double initial_scale = 1e-4;  // first bump: initial_scale * max(1, ||W||_max)
    double grow = 8.0;            // per retry within an iteration
    double shrink = 3.0;          // divisor for the next iteration's first guess
    double dual_scale = 1e-8;     // delta_c = dual_scale * mu^dual_power on zero pivots
    double dual_power = 0.25;
    double max_delta = 1e40;
  } reg;

  bool scale = true;          // gradient-based objective/constraint-row scaling
  // bounds are relaxed by min(bound_relax_factor, tol) * max(1, |bound|) so
  // boundary equalities touching box edges keep a strict interior
  double bound_relax_factor = 1e-8;
  int refine_rounds = 5;      // iterative refinement cap per solve
  double refine_trigger = 1e-8;  // refine when ||K d - rhs||_inf > trigger * (1 + ||rhs||_inf)

  bool verbose = false;
  std::string dump_kkt;  // when set, Matrix Market dump of the first assembled KKT
};

enum class SolveStatus { optimal, max_iter, infeasible_detected, eval_error };

const char* status_name(SolveStatus s);

struct SolveStats {
  int iterations = 0;
  int factorizations = 0;
  int symbolic_analyses = 0;
  Index kkt_dim = 0;
  Index kkt_nnz = 0;
  Index factor_nnz = 0;
  double time_total = 0.0;
  double time_derivatives = 0.0;
  double time_factorize = 0.0;
  double time_solve = 0.0;
};

struct Solution {
  SolveStatus status = SolveStatus::max_iter;
  std::string message;

  std::vector<double> x;       // full decision vector (fixed slots included)
  std::vector<double> lambda;  // constraint multipliers, original row order
  std::vector<double> z_lower, z_upper;  // bound multipliers per decision slot

  double objective = 0.0;  // sign-corrected for max-sense problems
  int iterations = 0;

  // unscaled residuals at the final iterate
  double theta = 0.0;           // constraint violation (inf norm)
  double stationarity = 0.0;    // dual infeasibility (inf norm)
  double complementarity = 0.0;

  SolveStats stats;

  void write_json(std::ostream& os) const;
};

Solution solve(const transcribe::StructuredNlp& nlp, const IpmOptions& opts,
               const backend::Backend& backend);

/// Structure-only pass: assemble the KKT pattern and run the one-time
/// symbolic analysis without solving. Used for size/scaling reports.
struct StructureReport {
  Index nvar = 0;
  Index m_con = 0;
  Index kkt_dim = 0;
  Index kkt_nnz = 0;
  Index factor_nnz = 0;
};

StructureReport analyze_structure(const transcribe::StructuredNlp& nlp);

}  // namespace octrans::ipm

#endif  // OCTRANS_IPM_SOLVER_HPP_

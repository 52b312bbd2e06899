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

#ifndef OCTRANS_SRC_IPM_INTERNAL_HPP_
#define OCTRANS_SRC_IPM_INTERNAL_HPP_

#include <span>
#include <vector>

#include "octrans/backend/backend.hpp"
#include "octrans/sparse/sparse.hpp"
#include "octrans/transcribe/nlp.hpp"

namespace octrans::ipm::detail {

using kernel::Index;
using transcribe::StructuredNlp;

/** Derivative evaluation layer: maps group kernels over their index ranges
 * through the backend, writing values/Jacobian/Hessian entries into global
 * coordinate buffers at precomputed offsets. Output positions are disjoint
 * per index, so parallel and serial runs are bitwise identical.
 *
 * All outputs are in the scaled problem: rows are multiplied by row_scale and
 * the objective by obj_scale.
 */
class EvalContext {
 public:
  EvalContext(const StructuredNlp& nlp, const backend::Backend& backend);

  // global Jacobian coordinate layout (constraint rows x slots)
  std::vector<Index> jac_row, jac_col;
  std::vector<double> jac_val;

  // global Hessian-of-Lagrangian coordinate layout, slot_row >= slot_col
  std::vector<Index> hess_row, hess_col;
  std::vector<double> hess_val;

  // objective gradient coordinate layout
  std::vector<Index> grad_col;
  std::vector<double> grad_val;

  double obj_scale = 1.0;
  std::vector<double> row_scale;  // per constraint row

  /// Gradient-based scaling at x0 (objective and row scales capped at 1).
  void compute_scaling(std::span<const double> x0, bool enabled);

  bool eval_constraints(std::span<const double> x, std::vector<double>& c_scaled);
  bool eval_constraints_jacobian(std::span<const double> x, std::vector<double>& c_scaled);
  bool eval_objective(std::span<const double> x, double& f_scaled);
  bool eval_gradient(std::span<const double> x, std::vector<double>& grad_dense);
  /// Fills hess_val with obj_scale * objective Hessian + sum_r lambda_scaled_r
  /// * row_scale_r * constraint Hessians.
  bool eval_hessian(std::span<const double> x, std::span<const double> lambda_scaled);

  double max_abs_hessian() const;

  double time_derivatives = 0.0;

 private:
  struct ConGroupCtx {
    const transcribe::ConstraintGroup* grp;
    Index jac_off = 0, hess_off = 0;
    int jac_nnz = 0, hess_nnz = 0;
    mutable std::vector<kernel::Evaluator::Workspace> ws;
  };
  struct ObjGroupCtx {
    const transcribe::ObjectiveGroup* grp;
    Index grad_off = 0, hess_off = 0;
    int grad_nnz = 0, hess_nnz = 0;
    mutable std::vector<kernel::Evaluator::Workspace> ws;
  };

  const StructuredNlp& nlp_;
  const backend::Backend& backend_;
  std::vector<ConGroupCtx> con_;
  std::vector<ObjGroupCtx> obj_;
  std::vector<double> c_raw_;
  std::vector<double> hess_weight_scratch_;  // per-worker row-weight buffers
  int weight_stride_ = 0;
};

/** Presolve reduction: rows whose kernel is literally one decision slot are
 * folded into variable bounds (the generated-code lvar/uvar pathway), which
 * keeps the barrier strictly interior and removes zero-curvature slack
 * columns. The NLP itself is untouched; only the KKT system shrinks.
 */
struct Reduction {
  explicit Reduction(const StructuredNlp& nlp);

  std::vector<double> xlo, xhi;   // effective slot bounds (lvar/uvar + folded rows)
  std::vector<Index> row_slot;    // row -> folded slot, or -1 when kept
  std::vector<Index> dual_index;  // row -> dual ordinal, or -1 when folded
  std::vector<Index> dual_row;    // dual ordinal -> row
  Index m_active = 0;
  bool contradictory = false;     // folded bounds crossed (infeasible boxes)
};

/** Symmetric KKT system [[W + Sigma, J^T], [J, 0]] over free primal slots,
 * slacks of the kept inequality rows, and kept constraint rows. Fixed slots
 * (effective lo == hi) are eliminated. The sparsity pattern and fill-reducing
 * symbolic analysis are built once; assemble() rewrites values in place. The
 * regularization pair (delta_w, delta_c) is applied by the factorization.
 */
class KktAssembler {
 public:
  KktAssembler(const StructuredNlp& nlp, const EvalContext& ec, const Reduction& red);

  Index n_free = 0, n_slack = 0, ntot = 0, m = 0, dim = 0;  // m = kept rows
  std::vector<Index> prim_index;   // slot -> reduced primal index or -1 (fixed)
  std::vector<Index> free_slot;    // reduced primal index -> slot
  std::vector<Index> slack_index;  // row -> slack ordinal or -1
  std::vector<Index> slack_of;     // slack ordinal -> row

  sparse::SparseSym K;

  /// Rewrites K.val from the eval buffers and the primal barrier diagonal.
  void assemble(const EvalContext& ec, std::span<const double> sigma);

  /// One-time fill-reducing ordering + symbolic factorization.
  const sparse::SymbolicLdl& symbolic();
  int analyze_count = 0;

 private:
  const Reduction& red_;
  std::vector<Index> hess_pos_, jac_pos_, slack_pos_, prim_diag_pos_, dual_diag_pos_;
  // single-entry equality rows: their zero-diagonal dual must not be pivoted
  // before the one primal column it touches (1x1 pivots would hit exact zeros)
  std::vector<std::pair<Index, Index>> pivot_after_;  // (primal col, dual kkt index)
  sparse::SymbolicLdl sym_;
  bool analyzed_ = false;
};

}  // namespace octrans::ipm::detail

#endif  // OCTRANS_SRC_IPM_INTERNAL_HPP_

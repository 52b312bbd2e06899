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

#ifndef OCTRANS_KERNEL_EVALUATOR_HPP_
#define OCTRANS_KERNEL_EVALUATOR_HPP_

#include <span>
#include <vector>

#include "octrans/kernel/graph.hpp"

namespace octrans::kernel {

/** Compiled evaluator for one kernel: values, Jacobian stencil entries, and
 * Hessian-of-weighted-rows stencil entries at a single grid index.
 *
 * Evaluators are immutable after construction. All scratch state lives in a
 * caller-owned Workspace, so evaluations over disjoint index ranges may run
 * concurrently on the same x. Every method writes results at fixed positions
 * in the output span (pattern order) and returns false when a domain error or
 * non-finite intermediate is encountered.
 */
class Evaluator {
 public:
  Evaluator(Kernel kernel, Pattern pattern);

  struct Workspace {
    std::vector<double> v;    // node values
    std::vector<double> p1;   // partial wrt first operand
    std::vector<double> p2;   // partial wrt second operand
    std::vector<double> dv;   // forward dual values
    std::vector<double> av;   // reverse adjoints
    std::vector<double> ad;   // reverse adjoint duals

    /// Total capacity in doubles; used by tests to assert no buffer growth.
    size_t capacity() const {
      return v.capacity() + p1.capacity() + p2.capacity() + dv.capacity() + av.capacity() + ad.capacity();
    }
  };

  Workspace make_workspace() const;

  const Kernel& kernel() const { return kernel_; }
  const Pattern& pattern() const { return pattern_; }
  int out_dim() const { return pattern_.out_dim; }
  int n_inputs() const { return pattern_.n_inputs; }

  /// out must hold out_dim() values.
  bool eval_values(std::span<const double> x, Index i, double* out, Workspace& ws) const;

  /// jac must hold pattern().jac.size() values (pattern order).
  bool eval_jacobian(std::span<const double> x, Index i, double* jac, Workspace& ws) const;

  /** Lower-triangle stencil entries of sum_r w_r * hess(row_r), written in
   * pattern().hess order. `row_weights` holds out_dim() multipliers.
   */
  bool eval_hessian(std::span<const double> x, Index i, const double* row_weights, double* hess,
                    Workspace& ws) const;

  /// Values and Jacobian in one sweep (shared forward pass).
  bool eval_values_jacobian(std::span<const double> x, Index i, double* out, double* jac,
                            Workspace& ws) const;

 private:
  bool forward(std::span<const double> x, Index i, Workspace& ws, bool partials) const;
  void reverse_row(int root, double* grad_out, Workspace& ws) const;
  bool jacobian_rows(double* jac, Workspace& ws) const;
  bool hess_direction(int j, const double* row_weights, Workspace& ws) const;

  Kernel kernel_;
  Pattern pattern_;
  std::vector<int> jac_row_ptr_;  // per row r: [ptr[r], ptr[r+1]) into pattern_.jac
  std::vector<int> input_node_;   // input ordinal -> node id
};

}  // namespace octrans::kernel

#endif  // OCTRANS_KERNEL_EVALUATOR_HPP_

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

#ifndef OCTRANS_TRANSCRIBE_NLP_HPP_
#define OCTRANS_TRANSCRIBE_NLP_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "octrans/dsl/ast.hpp"
#include "octrans/kernel/evaluator.hpp"

namespace octrans::transcribe {

using kernel::Index;

enum class Scheme { euler, trapezoid };

const char* scheme_name(Scheme s);

/// One contiguous block of the flat decision vector.
struct Slab {
  dsl::VarKind kind = dsl::VarKind::state;
  int decl = -1;
  int dim = 1;
  Index base = 0;
  Index nodes = 1;  // N+1 for states/controls, 1 for free variables
};

struct VariableLayout {
  std::vector<Slab> slabs;  // indexed by declaration index
  Index nvar = 0;
  Index N = 0;

  Index slot(int decl, int comp, Index node) const {
    const Slab& s = slabs[static_cast<size_t>(decl)];
    return s.base + node * s.dim + comp;
  }
  Index var_slot(int decl, int comp) const { return slabs[static_cast<size_t>(decl)].base + comp; }
};

/// Contiguous [lo, hi) range, or the two-endpoint set {lo, hi}.
struct IndexRange {
  Index lo = 0;
  Index hi = 0;
  bool endpoints = false;

  Index count() const {
    if (endpoints) return lo == hi ? 1 : 2;
    return hi - lo;
  }
  Index at(Index k) const { return endpoints ? (k == 0 ? lo : hi) : lo + k; }
};

struct ConstraintGroup {
  enum class Kind { dynamics, path, boundary };

  kernel::Evaluator eval;
  IndexRange range;
  int out_dim = 1;
  std::vector<double> lower, upper;  // per kernel row, identical across the range
  Kind kind = Kind::path;
  Index row_base = 0;  // first global constraint row
  std::string label;

  Index rows() const { return range.count() * out_dim; }
};

struct ObjectiveGroup {
  kernel::Evaluator eval;  // single root
  IndexRange range;
  double weight = 1.0;  // rational quadrature weight applied to every index
  std::string label;
};

/** Flat NLP with generator-structured constraints and objective.
 *
 * Immutable after transcription; safe to share across threads.
 */
struct StructuredNlp {
  std::string name;
  Scheme scheme = Scheme::trapezoid;
  Index N = 0;

  VariableLayout layout;
  std::vector<ConstraintGroup> con_groups;
  std::vector<ObjectiveGroup> obj_groups;

  std::vector<double> lvar, uvar;  // slot bounds (+-inf allowed)
  std::vector<double> x_start;
  // start-value clip interval: lvar/uvar tightened by single-slot path rows,
  // so trivial starts land inside the modeled boxes
  std::vector<double> clip_lo, clip_hi;
  std::vector<double> lcon, ucon;  // flattened per-row constraint bounds
  Index m_con = 0;

  bool maximize = false;  // objective sign flipped during transcription

  Index nvar() const { return layout.nvar; }

  /// JSON debug dump (layout, kernels in prefix form, bounds).
  void dump(std::ostream& os) const;
};

}  // namespace octrans::transcribe

#endif  // OCTRANS_TRANSCRIBE_NLP_HPP_

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

#ifndef OCTRANS_SPARSE_SPARSE_HPP_
#define OCTRANS_SPARSE_SPARSE_HPP_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace octrans::sparse {

using Index = std::int64_t;

/** Symmetric sparse matrix, lower triangle in compressed-column form.
 * Row indices are strictly increasing within a column and never above the
 * diagonal.
 */
struct SparseSym {
  Index n = 0;
  std::vector<Index> colp;  // size n+1
  std::vector<Index> rowi;
  std::vector<double> val;

  Index nnz() const { return colp.empty() ? 0 : colp[static_cast<size_t>(n)]; }
};

/// Builds a SparseSym from (row, col) coordinates (any triangle, duplicates summed).
SparseSym sparse_from_coo(Index n, std::span<const Index> rows, std::span<const Index> cols,
                          std::span<const double> vals);

/// y = A x with the symmetric mirror applied.
void matvec_sym(const SparseSym& A, std::span<const double> x, std::span<double> y);

double norm_inf_sym(const SparseSym& A);  // max row sum
double max_abs(const SparseSym& A);

/// Matrix Market "coordinate real symmetric" export of the lower triangle.
void write_matrix_market(const SparseSym& A, std::ostream& os);

struct Inertia {
  Index positive = 0;
  Index negative = 0;
  Index zero = 0;
};

/** One-time symbolic analysis: fill-reducing ordering (approximate minimum
 * degree) plus the exact elimination structure of L for P A P^T.
 */
struct SymbolicLdl {
  Index n = 0;
  std::vector<Index> perm;   // perm[k] = original index of pivot k
  std::vector<Index> iperm;  // inverse
  std::vector<Index> parent; // elimination tree on permuted indices
  std::vector<Index> Lp;     // L column pointers, size n+1 (off-diagonal entries)
  Index lnz = 0;

  // permuted upper-triangular pattern of A and the value scatter map
  std::vector<Index> Up, Ui;
  std::vector<Index> a_to_u;  // input entry ordinal -> slot in the permuted copy

  Index nnz_L() const { return lnz; }
};

/// Fill-reducing permutation via approximate minimum degree.
std::vector<Index> amd_order(const SparseSym& A);

SymbolicLdl analyze(const SparseSym& A);
SymbolicLdl analyze_ordered(const SparseSym& A, std::span<const Index> perm);

/** LDL^T factors with 1x1 pivots in the fixed order of the symbolic pass.
 * Pivots with |d| <= rel_zero_pivot * max|A_regularized| count as zero in the
 * inertia; breakdown is encoded there, never thrown.
 */
struct LdlFactor {
  Index n = 0;
  std::vector<Index> perm, iperm;
  std::vector<Index> Lp, Li;
  std::vector<double> Lx;
  std::vector<double> D, Dinv;
  Inertia inertia;
  std::vector<Index> zero_pivots;  // original indices of pivots counted in inertia.zero
  double delta_w = 0.0, delta_c = 0.0;
  Index split = 0;  // slots < split get +delta_w, the rest -delta_c
};

struct FactorizeOptions {
  double rel_zero_pivot = 1e-14;
};

/** Numeric factorization of A + diag(delta_w on [0, split), -delta_c on
 * [split, n)). The factor may be reused across calls to avoid reallocation.
 */
void factorize(const SparseSym& A, const SymbolicLdl& sym, double delta_w, double delta_c, Index split,
               LdlFactor& F, const FactorizeOptions& opts = {});

/// Convenience wrapper.
LdlFactor factorize(const SparseSym& A, const SymbolicLdl& sym, double delta_w = 0.0,
                    double delta_c = 0.0, Index split = -1, const FactorizeOptions& opts = {});

/** x = A^{-1} b via permuted forward/diagonal/backward substitution.
 * Refuses (throws std::runtime_error) when the factorization has zero pivots.
 */
std::vector<double> solve(const LdlFactor& F, std::span<const double> b);

/** Residual-correction rounds against the regularized matrix, stopping when
 * ||r||_inf <= 1e-12 (||A||_inf ||x||_inf + ||b||_inf) or after max_rounds.
 */
void refine(const SparseSym& A, const LdlFactor& F, std::span<const double> b, std::vector<double>& x,
            int max_rounds = 5);

}  // namespace octrans::sparse

#endif  // OCTRANS_SPARSE_SPARSE_HPP_

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

#include <amd.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "octrans/sparse/sparse.hpp"

namespace octrans::sparse {

namespace {

// full (both triangles) adjacency pattern of the symmetric matrix, diagonal
// stripped, as AMD expects
void full_pattern(const SparseSym& A, std::vector<Index>& Fp, std::vector<Index>& Fi) {
  const Index n = A.n;
  std::vector<Index> count(static_cast<size_t>(n), 0);
  for (Index j = 0; j < n; ++j)
    for (Index p = A.colp[static_cast<size_t>(j)]; p < A.colp[static_cast<size_t>(j) + 1]; ++p) {
      const Index i = A.rowi[static_cast<size_t>(p)];
      if (i == j) continue;
      count[static_cast<size_t>(i)]++;
      count[static_cast<size_t>(j)]++;
    }
  Fp.assign(static_cast<size_t>(n) + 1, 0);
  for (Index j = 0; j < n; ++j) Fp[static_cast<size_t>(j) + 1] = Fp[static_cast<size_t>(j)] + count[static_cast<size_t>(j)];
  Fi.resize(static_cast<size_t>(Fp[static_cast<size_t>(n)]));
  std::vector<Index> next(Fp.begin(), Fp.end() - 1);
  for (Index j = 0; j < n; ++j)
    for (Index p = A.colp[static_cast<size_t>(j)]; p < A.colp[static_cast<size_t>(j) + 1]; ++p) {
      const Index i = A.rowi[static_cast<size_t>(p)];
      if (i == j) continue;
      Fi[static_cast<size_t>(next[static_cast<size_t>(j)]++)] = i;
      Fi[static_cast<size_t>(next[static_cast<size_t>(i)]++)] = j;
    }
  for (Index j = 0; j < n; ++j)
    std::sort(Fi.begin() + static_cast<std::ptrdiff_t>(Fp[static_cast<size_t>(j)]),
              Fi.begin() + static_cast<std::ptrdiff_t>(Fp[static_cast<size_t>(j) + 1]));
}

}  // namespace

std::vector<Index> amd_order(const SparseSym& A) {
  static_assert(sizeof(Index) == sizeof(SuiteSparse_long), "AMD long interface expected");
  std::vector<Index> Fp, Fi;
  full_pattern(A, Fp, Fi);
  if (Fi.empty()) Fi.resize(1);  // AMD rejects a null Ai even when nnz == 0
  std::vector<Index> perm(static_cast<size_t>(A.n));
  if (A.n == 0) return perm;
  double control[AMD_CONTROL], info[AMD_INFO];
  amd_l_defaults(control);
  // plain element absorption: on grid-periodic KKT patterns the aggressive
  // variant both wobbles with N and produces ~20% more fill
  control[AMD_AGGRESSIVE] = 0.0;
  int status = amd_l_order(A.n, Fp.data(), Fi.data(), perm.data(), control, info);
  if (status != AMD_OK && status != AMD_OK_BUT_JUMBLED)
    throw std::runtime_error("AMD ordering failed (status " + std::to_string(status) + ")");
  return perm;
}

SymbolicLdl analyze_ordered(const SparseSym& A, std::span<const Index> perm) {
  const Index n = A.n;
  SymbolicLdl S;
  S.n = n;
  S.perm.assign(perm.begin(), perm.end());
  S.iperm.resize(static_cast<size_t>(n));
  for (Index k = 0; k < n; ++k) S.iperm[static_cast<size_t>(S.perm[static_cast<size_t>(k)])] = k;

  // permuted upper-triangular pattern with the value scatter map
  const Index nnz = A.nnz();
  std::vector<Index> count(static_cast<size_t>(n), 0);
  std::vector<Index> ucol(static_cast<size_t>(nnz)), urow(static_cast<size_t>(nnz));
  for (Index j = 0; j < n; ++j)
    for (Index p = A.colp[static_cast<size_t>(j)]; p < A.colp[static_cast<size_t>(j) + 1]; ++p) {
      const Index i = A.rowi[static_cast<size_t>(p)];
      Index ni = S.iperm[static_cast<size_t>(i)], nj = S.iperm[static_cast<size_t>(j)];
      if (ni < nj) std::swap(ni, nj);  // store at column ni, row nj (upper form)
      ucol[static_cast<size_t>(p)] = ni;
      urow[static_cast<size_t>(p)] = nj;
      count[static_cast<size_t>(ni)]++;
    }
  S.Up.assign(static_cast<size_t>(n) + 1, 0);
  for (Index j = 0; j < n; ++j) S.Up[static_cast<size_t>(j) + 1] = S.Up[static_cast<size_t>(j)] + count[static_cast<size_t>(j)];
  S.Ui.resize(static_cast<size_t>(nnz));
  S.a_to_u.resize(static_cast<size_t>(nnz));
  {
    std::vector<Index> next(S.Up.begin(), S.Up.end() - 1);
    for (Index p = 0; p < nnz; ++p) {
      Index pos = next[static_cast<size_t>(ucol[static_cast<size_t>(p)])]++;
      S.Ui[static_cast<size_t>(pos)] = urow[static_cast<size_t>(p)];
      S.a_to_u[static_cast<size_t>(p)] = pos;
    }
  }

  // elimination tree and exact column counts of L (up-looking symbolic pass)
  S.parent.assign(static_cast<size_t>(n), -1);
  std::vector<Index> lnz(static_cast<size_t>(n), 0);
  std::vector<Index> flag(static_cast<size_t>(n), -1);
  for (Index k = 0; k < n; ++k) {
    flag[static_cast<size_t>(k)] = k;
    for (Index p = S.Up[static_cast<size_t>(k)]; p < S.Up[static_cast<size_t>(k) + 1]; ++p) {
      Index i = S.Ui[static_cast<size_t>(p)];
      while (i < k && flag[static_cast<size_t>(i)] != k) {
        if (S.parent[static_cast<size_t>(i)] < 0) S.parent[static_cast<size_t>(i)] = k;
        lnz[static_cast<size_t>(i)]++;  // L(k, i) becomes structurally nonzero
        flag[static_cast<size_t>(i)] = k;
        i = S.parent[static_cast<size_t>(i)];
      }
    }
  }
  S.Lp.assign(static_cast<size_t>(n) + 1, 0);
  for (Index j = 0; j < n; ++j) S.Lp[static_cast<size_t>(j) + 1] = S.Lp[static_cast<size_t>(j)] + lnz[static_cast<size_t>(j)];
  S.lnz = S.Lp[static_cast<size_t>(n)];
  return S;
}

SymbolicLdl analyze(const SparseSym& A) {
  auto perm = amd_order(A);
  return analyze_ordered(A, perm);
}

void factorize(const SparseSym& A, const SymbolicLdl& sym, double delta_w, double delta_c, Index split,
               LdlFactor& F, const FactorizeOptions& opts) {
  const Index n = sym.n;
  if (split < 0) split = n;
  F.n = n;
  F.perm = sym.perm;
  F.iperm = sym.iperm;
  F.Lp = sym.Lp;
  F.Li.resize(static_cast<size_t>(sym.lnz));
  F.Lx.resize(static_cast<size_t>(sym.lnz));
  F.D.assign(static_cast<size_t>(n), 0.0);
  F.Dinv.assign(static_cast<size_t>(n), 0.0);
  F.delta_w = delta_w;
  F.delta_c = delta_c;
  F.split = split;

  // scatter values into the permuted upper copy
  std::vector<double> Ux(static_cast<size_t>(A.nnz()), 0.0);
  for (size_t p = 0; p < Ux.size(); ++p) Ux[static_cast<size_t>(sym.a_to_u[p])] = A.val[p];

  F.zero_pivots.clear();
  std::vector<double> y(static_cast<size_t>(n), 0.0);
  std::vector<Index> pattern(static_cast<size_t>(n)), flag(static_cast<size_t>(n), -1),
      lfill(static_cast<size_t>(n), 0);

  Inertia inertia;
  for (Index k = 0; k < n; ++k) {
    // sparse triangular solve for row k of L: gather the reach of column k
    Index top = n;
    flag[static_cast<size_t>(k)] = k;
    for (Index p = sym.Up[static_cast<size_t>(k)]; p < sym.Up[static_cast<size_t>(k) + 1]; ++p) {
      Index i = sym.Ui[static_cast<size_t>(p)];
      y[static_cast<size_t>(i)] += Ux[static_cast<size_t>(p)];
      Index len = 0;
      while (flag[static_cast<size_t>(i)] != k) {
        pattern[static_cast<size_t>(len++)] = i;
        flag[static_cast<size_t>(i)] = k;
        i = sym.parent[static_cast<size_t>(i)];
      }
      while (len > 0) pattern[static_cast<size_t>(--top)] = pattern[static_cast<size_t>(--len)];
    }
    double d = y[static_cast<size_t>(k)] +
               (sym.perm[static_cast<size_t>(k)] < split ? delta_w : -delta_c);
    // pivot scale: magnitude of what the pivot accumulation actually summed,
    // so degeneracy detection is invariant to unrelated large entries
    double pivot_scale = std::abs(d);
    y[static_cast<size_t>(k)] = 0.0;
    for (; top < n; ++top) {
      const Index i = pattern[static_cast<size_t>(top)];
      const double yi = y[static_cast<size_t>(i)];
      y[static_cast<size_t>(i)] = 0.0;
      const Index p2 = sym.Lp[static_cast<size_t>(i)] + lfill[static_cast<size_t>(i)];
      for (Index p = sym.Lp[static_cast<size_t>(i)]; p < p2; ++p)
        y[static_cast<size_t>(F.Li[static_cast<size_t>(p)])] -= F.Lx[static_cast<size_t>(p)] * yi;
      const double lki = yi * F.Dinv[static_cast<size_t>(i)];
      const double upd = lki * yi;
      d -= upd;
      pivot_scale = std::max(pivot_scale, std::abs(upd));
      F.Li[static_cast<size_t>(p2)] = k;
      F.Lx[static_cast<size_t>(p2)] = lki;
      lfill[static_cast<size_t>(i)]++;
    }
    F.D[static_cast<size_t>(k)] = d;
    const double zero_thresh = opts.rel_zero_pivot * std::max(pivot_scale, 1e-30);
    if (!std::isfinite(d) || std::abs(d) <= zero_thresh) {
      inertia.zero++;
      F.zero_pivots.push_back(sym.perm[static_cast<size_t>(k)]);
      F.Dinv[static_cast<size_t>(k)] = 0.0;  // downstream updates skip this pivot
    } else {
      (d > 0 ? inertia.positive : inertia.negative)++;
      F.Dinv[static_cast<size_t>(k)] = 1.0 / d;
    }
  }
  F.inertia = inertia;
}

LdlFactor factorize(const SparseSym& A, const SymbolicLdl& sym, double delta_w, double delta_c,
                    Index split, const FactorizeOptions& opts) {
  LdlFactor F;
  factorize(A, sym, delta_w, delta_c, split, F, opts);
  return F;
}

std::vector<double> solve(const LdlFactor& F, std::span<const double> b) {
  if (F.inertia.zero > 0)
    throw std::runtime_error("LDL^T solve refused: factorization has " +
                             std::to_string(F.inertia.zero) + " zero pivots");
  const Index n = F.n;
  std::vector<double> y(static_cast<size_t>(n));
  for (Index k = 0; k < n; ++k) y[static_cast<size_t>(k)] = b[static_cast<size_t>(F.perm[static_cast<size_t>(k)])];
  // L y = Pb
  for (Index k = 0; k < n; ++k) {
    const double yk = y[static_cast<size_t>(k)];
    if (yk == 0.0) continue;
    for (Index p = F.Lp[static_cast<size_t>(k)]; p < F.Lp[static_cast<size_t>(k) + 1]; ++p)
      y[static_cast<size_t>(F.Li[static_cast<size_t>(p)])] -= F.Lx[static_cast<size_t>(p)] * yk;
  }
  for (Index k = 0; k < n; ++k) y[static_cast<size_t>(k)] *= F.Dinv[static_cast<size_t>(k)];
  // L^T x = y
  for (Index k = n; k-- > 0;) {
    double s = y[static_cast<size_t>(k)];
    for (Index p = F.Lp[static_cast<size_t>(k)]; p < F.Lp[static_cast<size_t>(k) + 1]; ++p)
      s -= F.Lx[static_cast<size_t>(p)] * y[static_cast<size_t>(F.Li[static_cast<size_t>(p)])];
    y[static_cast<size_t>(k)] = s;
  }
  std::vector<double> x(static_cast<size_t>(n));
  for (Index k = 0; k < n; ++k) x[static_cast<size_t>(F.perm[static_cast<size_t>(k)])] = y[static_cast<size_t>(k)];
  return x;
}

void refine(const SparseSym& A, const LdlFactor& F, std::span<const double> b, std::vector<double>& x,
            int max_rounds) {
  const Index n = A.n;
  std::vector<double> r(static_cast<size_t>(n));
  const double anorm = norm_inf_sym(A) + std::abs(F.delta_w) + std::abs(F.delta_c);
  double bnorm = 0.0;
  for (double v : b) bnorm = std::max(bnorm, std::abs(v));

  for (int round = 0; round < max_rounds; ++round) {
    // r = b - (A + deltas) x
    matvec_sym(A, x, r);
    double rnorm = 0.0, xnorm = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double delta = i < F.split ? F.delta_w : -F.delta_c;
      r[static_cast<size_t>(i)] = b[static_cast<size_t>(i)] - r[static_cast<size_t>(i)] -
                                  delta * x[static_cast<size_t>(i)];
      rnorm = std::max(rnorm, std::abs(r[static_cast<size_t>(i)]));
      xnorm = std::max(xnorm, std::abs(x[static_cast<size_t>(i)]));
    }
    if (rnorm <= 1e-12 * (anorm * xnorm + bnorm)) break;
    std::vector<double> dx = solve(F, r);
    for (Index i = 0; i < n; ++i) x[static_cast<size_t>(i)] += dx[static_cast<size_t>(i)];
  }
}

}  // namespace octrans::sparse

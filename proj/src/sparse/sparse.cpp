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

#include "octrans/sparse/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

namespace octrans::sparse {

SparseSym sparse_from_coo(Index n, std::span<const Index> rows, std::span<const Index> cols,
                          std::span<const double> vals) {
  std::map<std::pair<Index, Index>, double> entries;
  for (size_t e = 0; e < rows.size(); ++e) {
    Index i = rows[e], j = cols[e];
    if (i < j) std::swap(i, j);  // lower triangle
    entries[{j, i}] += vals[e];  // keyed (col, row) for CSC order
  }
  SparseSym A;
  A.n = n;
  A.colp.assign(static_cast<size_t>(n) + 1, 0);
  for (const auto& [key, v] : entries) A.colp[static_cast<size_t>(key.first) + 1]++;
  for (Index j = 0; j < n; ++j) A.colp[static_cast<size_t>(j) + 1] += A.colp[static_cast<size_t>(j)];
  A.rowi.resize(entries.size());
  A.val.resize(entries.size());
  size_t at = 0;
  for (const auto& [key, v] : entries) {
    A.rowi[at] = key.second;
    A.val[at] = v;
    ++at;
  }
  return A;
}

void matvec_sym(const SparseSym& A, std::span<const double> x, std::span<double> y) {
  std::fill(y.begin(), y.end(), 0.0);
  for (Index j = 0; j < A.n; ++j) {
    for (Index p = A.colp[static_cast<size_t>(j)]; p < A.colp[static_cast<size_t>(j) + 1]; ++p) {
      const Index i = A.rowi[static_cast<size_t>(p)];
      const double a = A.val[static_cast<size_t>(p)];
      y[static_cast<size_t>(i)] += a * x[static_cast<size_t>(j)];
      if (i != j) y[static_cast<size_t>(j)] += a * x[static_cast<size_t>(i)];
    }
  }
}

double norm_inf_sym(const SparseSym& A) {
  std::vector<double> row_sum(static_cast<size_t>(A.n), 0.0);
  for (Index j = 0; j < A.n; ++j) {
    for (Index p = A.colp[static_cast<size_t>(j)]; p < A.colp[static_cast<size_t>(j) + 1]; ++p) {
      const Index i = A.rowi[static_cast<size_t>(p)];
      const double a = std::abs(A.val[static_cast<size_t>(p)]);
      row_sum[static_cast<size_t>(i)] += a;
      if (i != j) row_sum[static_cast<size_t>(j)] += a;
    }
  }
  double m = 0.0;
  for (double v : row_sum) m = std::max(m, v);
  return m;
}

double max_abs(const SparseSym& A) {
  double m = 0.0;
  for (double v : A.val) m = std::max(m, std::abs(v));
  return m;
}

void write_matrix_market(const SparseSym& A, std::ostream& os) {
  os << "%%MatrixMarket matrix coordinate real symmetric\n";
  os << A.n << " " << A.n << " " << A.nnz() << "\n";
  char buf[96];
  for (Index j = 0; j < A.n; ++j) {
    for (Index p = A.colp[static_cast<size_t>(j)]; p < A.colp[static_cast<size_t>(j) + 1]; ++p) {
      std::snprintf(buf, sizeof(buf), "%lld %lld %.17g\n",
                    static_cast<long long>(A.rowi[static_cast<size_t>(p)] + 1),
                    static_cast<long long>(j + 1), A.val[static_cast<size_t>(p)]);
      os << buf;
    }
  }
}

}  // namespace octrans::sparse

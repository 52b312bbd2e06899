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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "octrans/sparse/sparse.hpp"

using namespace octrans::sparse;

namespace {

SparseSym from_dense(const Eigen::MatrixXd& M) {
  std::vector<Index> rows, cols;
  std::vector<double> vals;
  for (Index j = 0; j < M.cols(); ++j)
    for (Index i = j; i < M.rows(); ++i)
      if (M(i, j) != 0.0) {
        rows.push_back(i);
        cols.push_back(j);
        vals.push_back(M(i, j));
      }
  return sparse_from_coo(M.rows(), rows, cols, vals);
}

// dense reconstruction P A P^T = L D L^T from the factor
Eigen::MatrixXd reconstruct(const LdlFactor& F) {
  Eigen::MatrixXd L = Eigen::MatrixXd::Identity(F.n, F.n);
  for (Index j = 0; j < F.n; ++j)
    for (Index p = F.Lp[static_cast<size_t>(j)]; p < F.Lp[static_cast<size_t>(j) + 1]; ++p)
      L(F.Li[static_cast<size_t>(p)], j) = F.Lx[static_cast<size_t>(p)];
  Eigen::VectorXd D(F.n);
  for (Index i = 0; i < F.n; ++i) D(i) = F.D[static_cast<size_t>(i)];
  return L * D.asDiagonal() * L.transpose();
}

Inertia eigen_inertia(const Eigen::MatrixXd& M, double tol = 1e-10) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  Inertia in;
  double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  for (Index i = 0; i < M.rows(); ++i) {
    double ev = es.eigenvalues()(i);
    if (ev > tol * scale) in.positive++;
    else if (ev < -tol * scale) in.negative++;
    else in.zero++;
  }
  return in;
}

}  // namespace

TEST_CASE("factorize: diagonal inertia") {
  Eigen::MatrixXd M = Eigen::Vector3d(2.0, -3.0, 5.0).asDiagonal();
  SparseSym A = from_dense(M);
  auto F = factorize(A, analyze(A));
  CHECK(F.inertia.positive == 2);
  CHECK(F.inertia.negative == 1);
  CHECK(F.inertia.zero == 0);
  // D is the permuted diagonal
  std::vector<double> d(F.D);
  std::sort(d.begin(), d.end());
  CHECK(d == std::vector<double>{-3.0, 2.0, 5.0});
}

TEST_CASE("factorize: 2x2 saddle point") {
  Eigen::MatrixXd M(2, 2);
  M << 1, 1, 1, 0;
  SparseSym A = from_dense(M);
  // natural order so the factorization is the textbook one
  std::vector<Index> nat = {0, 1};
  auto F = factorize(A, analyze_ordered(A, nat));
  CHECK(F.inertia.positive == 1);
  CHECK(F.inertia.negative == 1);
  CHECK(F.inertia.zero == 0);

  auto x = solve(F, std::vector<double>{1.0, 1.0});
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("factorize: random quasi-definite matrices vs dense oracle") {
  std::mt19937 rng(123);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Index np = 5 + static_cast<Index>(rng() % 20);
    const Index nd = 3 + static_cast<Index>(rng() % 15);
    const Index n = np + nd;
    // sparse-ish quasi-definite: [[H, J^T], [J, -C]] with H, C SPD
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(np, np);
    for (Index i = 0; i < np; ++i) H(i, i) = 0.5 + std::abs(gauss(rng));
    for (int e = 0; e < np; ++e) {
      Index i = static_cast<Index>(rng() % static_cast<unsigned long>(np));
      Index j = static_cast<Index>(rng() % static_cast<unsigned long>(np));
      if (i == j) continue;
      double v = 0.3 * gauss(rng);
      H(i, j) += v;
      H(j, i) += v;
      H(i, i) += 1.0;  // keep diagonally dominant
      H(j, j) += 1.0;
    }
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nd, np);
    for (int e = 0; e < 2 * nd; ++e)
      J(static_cast<Index>(rng() % static_cast<unsigned long>(nd)),
        static_cast<Index>(rng() % static_cast<unsigned long>(np))) = gauss(rng);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    M.topLeftCorner(np, np) = H;
    M.bottomLeftCorner(nd, np) = J;
    M.topRightCorner(np, nd) = J.transpose();
    for (Index i = 0; i < nd; ++i) M(np + i, np + i) = -(0.5 + std::abs(gauss(rng)));

    SparseSym A = from_dense(M);
    auto F = factorize(A, analyze(A));

    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    for (Index k = 0; k < n; ++k) P(k, F.perm[static_cast<size_t>(k)]) = 1.0;
    double err = (reconstruct(F) - P * M * P.transpose()).cwiseAbs().maxCoeff();
    CHECK(err <= 1e-10 * max_abs(A));

    Inertia want = eigen_inertia(M);
    CHECK(F.inertia.positive == want.positive);
    CHECK(F.inertia.negative == want.negative);
    CHECK(F.inertia.zero == want.zero);
  }
}

TEST_CASE("analyze: AMD keeps arrowhead fill linear") {
  const Index n = 100;
  // dense last row/column plus diagonal
  std::vector<Index> rows, cols;
  std::vector<double> vals;
  for (Index i = 0; i < n; ++i) {
    rows.push_back(i);
    cols.push_back(i);
    vals.push_back(4.0);
  }
  for (Index i = 0; i + 1 < n; ++i) {
    rows.push_back(n - 1);
    cols.push_back(i);
    vals.push_back(1.0);
  }
  SparseSym A = sparse_from_coo(n, rows, cols, vals);

  // natural order: reverse arrowhead (dense row first is the bad case)
  std::vector<Index> bad(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) bad[static_cast<size_t>(i)] = n - 1 - i;  // dense node eliminated first
  auto sym_bad = analyze_ordered(A, bad);
  auto sym_amd = analyze(A);
  CHECK(sym_bad.nnz_L() == (n - 1) * n / 2);  // O(n^2) fill
  CHECK(sym_amd.nnz_L() <= 2 * n);            // O(n)
}

TEST_CASE("solve: identity") {
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(5, 5);
  SparseSym A = from_dense(M);
  auto F = factorize(A, analyze(A));
  std::vector<double> b = {1, 2, 3, 4, 5};
  auto x = solve(F, b);
  for (int i = 0; i < 5; ++i) CHECK(x[static_cast<size_t>(i)] == doctest::Approx(b[static_cast<size_t>(i)]));
}

TEST_CASE("solve refuses zero-pivot factorizations") {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2, 2);
  M(0, 0) = 1.0;
  SparseSym A = from_dense(M);  // second pivot structurally zero
  auto F = factorize(A, analyze(A));
  CHECK(F.inertia.zero == 1);
  CHECK_THROWS_AS(solve(F, std::vector<double>{1.0, 1.0}), std::runtime_error);
}

TEST_CASE("regularization shifts the blocks") {
  // A = [[0, 1], [1, 0]]: with delta_w on slot 0 and -delta_c on slot 1
  std::vector<Index> rows = {1};
  std::vector<Index> cols = {0};
  std::vector<double> vals = {1.0};
  SparseSym A = sparse_from_coo(2, rows, cols, vals);
  std::vector<Index> nat = {0, 1};
  auto F = factorize(A, analyze_ordered(A, nat), /*delta_w=*/2.0, /*delta_c=*/0.5, /*split=*/1);
  // matrix becomes [[2, 1], [1, -0.5]]: d1 = 2, d2 = -0.5 - 1/2 = -1
  CHECK(F.D[0] == doctest::Approx(2.0));
  CHECK(F.D[1] == doctest::Approx(-1.0));
  CHECK(F.inertia.positive == 1);
  CHECK(F.inertia.negative == 1);
}

TEST_CASE("refine: one round shrinks the residual of an ill-conditioned system") {
  // small leading pivot in fixed order loses ~10 digits; refinement recovers them
  const Index n = 2;
  std::vector<Index> rows = {0, 1, 1};
  std::vector<Index> cols = {0, 0, 1};
  std::vector<double> vals = {1e-10, 1.0, 0.0};
  SparseSym A = sparse_from_coo(n, rows, cols, vals);
  std::vector<Index> nat = {0, 1};
  auto F = factorize(A, analyze_ordered(A, nat));
  std::vector<double> b = {0.3, 0.7};

  auto residual_inf = [&](const std::vector<double>& x) {
    std::vector<double> r(static_cast<size_t>(n));
    matvec_sym(A, x, r);
    double m = 0.0;
    for (Index i = 0; i < n; ++i) m = std::max(m, std::abs(b[static_cast<size_t>(i)] - r[static_cast<size_t>(i)]));
    return m;
  };

  auto x = solve(F, b);
  double r0 = residual_inf(x);
  REQUIRE(r0 > 0.0);
  refine(A, F, b, x, 1);
  double r1 = residual_inf(x);
  CHECK(r1 <= r0 / 10.0);
}

TEST_CASE("permutation is a bijection and solve inverts the operator") {
  std::mt19937 rng(77);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd M = Eigen::MatrixXd::Random(30, 30);
  M = (M + M.transpose()).eval();
  M.diagonal().array() += 31.0;  // SPD
  SparseSym A = from_dense(M);
  auto sym = analyze(A);
  std::vector<char> seen(30, 0);
  for (Index k = 0; k < 30; ++k) {
    REQUIRE(sym.perm[static_cast<size_t>(k)] >= 0);
    REQUIRE(sym.perm[static_cast<size_t>(k)] < 30);
    seen[static_cast<size_t>(sym.perm[static_cast<size_t>(k)])]++;
  }
  for (char c : seen) CHECK(c == 1);

  auto F = factorize(A, sym);
  std::vector<double> b(30);
  for (auto& v : b) v = gauss(rng);
  auto x = solve(F, b);
  refine(A, F, b, x, 5);
  std::vector<double> Ax(30);
  matvec_sym(A, x, Ax);
  for (int i = 0; i < 30; ++i) CHECK(Ax[static_cast<size_t>(i)] == doctest::Approx(b[static_cast<size_t>(i)]).epsilon(1e-9));
}

TEST_CASE("matrix market export") {
  Eigen::MatrixXd M(2, 2);
  M << 1, 2, 2, -3;
  SparseSym A = from_dense(M);
  std::ostringstream os;
  write_matrix_market(A, os);
  std::string s = os.str();
  CHECK(s.find("%%MatrixMarket matrix coordinate real symmetric") == 0);
  CHECK(s.find("2 2 3") != std::string::npos);
  CHECK(s.find("2 1 2") != std::string::npos);
}

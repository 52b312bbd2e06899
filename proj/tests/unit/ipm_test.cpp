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
#include <cmath>
#include <limits>
#include <random>

#include "ipm/ipm_internal.hpp"
#include "octrans/bench/problems.hpp"
#include "octrans/dsl/parser.hpp"
#include "octrans/ipm/solver.hpp"
#include "octrans/transcribe/transcribe.hpp"

using namespace octrans;
using transcribe::StructuredNlp;
using kernel::Index;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// one-slot NLP: min f(x) with a single box-bounded variable
StructuredNlp scalar_nlp(double lo, double hi, double start,
                         const std::function<int(kernel::Graph&, int)>& body) {
  StructuredNlp nlp;
  nlp.layout.nvar = 1;
  nlp.N = 1;
  kernel::Kernel k;
  int x = k.graph.input({0, 0}, "x");
  k.roots.push_back(body(k.graph, x));
  kernel::Pattern pat = detect_pattern(k);
  nlp.obj_groups.push_back(transcribe::ObjectiveGroup{
      kernel::Evaluator(std::move(k), std::move(pat)), transcribe::IndexRange{0, 1, false}, 1.0, "obj"});
  nlp.lvar = {lo};
  nlp.uvar = {hi};
  nlp.x_start = {start};
  nlp.m_con = 0;
  return nlp;
}

// general box QP: min 1/2 x'Qx + c'x, l <= x <= u
StructuredNlp qp_nlp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c, const Eigen::VectorXd& l,
                     const Eigen::VectorXd& u) {
  const Index n = Q.rows();
  StructuredNlp nlp;
  nlp.layout.nvar = n;
  nlp.N = 1;
  kernel::Kernel k;
  std::vector<int> xs;
  for (Index i = 0; i < n; ++i) xs.push_back(k.graph.input({i, 0}, "x" + std::to_string(i)));
  int acc = k.graph.cnst(0.0);
  for (Index i = 0; i < n; ++i) {
    acc = k.graph.add(acc, k.graph.mul(k.graph.cnst(c(i)), xs[static_cast<size_t>(i)]));
    for (Index j = 0; j < n; ++j) {
      if (Q(i, j) == 0.0) continue;
      acc = k.graph.add(acc, k.graph.mul(k.graph.cnst(0.5 * Q(i, j)),
                                         k.graph.mul(xs[static_cast<size_t>(i)], xs[static_cast<size_t>(j)])));
    }
  }
  k.roots.push_back(acc);
  kernel::Pattern pat = detect_pattern(k);
  nlp.obj_groups.push_back(transcribe::ObjectiveGroup{
      kernel::Evaluator(std::move(k), std::move(pat)), transcribe::IndexRange{0, 1, false}, 1.0, "qp"});
  nlp.lvar.assign(static_cast<size_t>(n), 0.0);
  nlp.uvar.assign(static_cast<size_t>(n), 0.0);
  nlp.x_start.assign(static_cast<size_t>(n), 0.0);
  for (Index i = 0; i < n; ++i) {
    nlp.lvar[static_cast<size_t>(i)] = l(i);
    nlp.uvar[static_cast<size_t>(i)] = u(i);
    nlp.x_start[static_cast<size_t>(i)] = 0.5 * (std::max(l(i), -1.0) + std::min(u(i), 1.0));
  }
  nlp.m_con = 0;
  return nlp;
}

// brute-force active-set enumeration oracle for strictly convex box QPs
Eigen::VectorXd active_set_oracle(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c,
                                  const Eigen::VectorXd& l, const Eigen::VectorXd& u,
                                  const std::vector<int>& bounded) {
  const Index n = Q.rows();
  const size_t nb = bounded.size();
  std::vector<int> state(nb, 0);  // 0 free, 1 lower, 2 upper
  Eigen::VectorXd best;
  double best_violation = kInf;
  const long total = static_cast<long>(std::pow(3.0, static_cast<double>(nb)));
  for (long code = 0; code < total; ++code) {
    long rem = code;
    for (size_t b = 0; b < nb; ++b) {
      state[b] = static_cast<int>(rem % 3);
      rem /= 3;
    }
    std::vector<Index> free_idx;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<char> is_free(static_cast<size_t>(n), 1);
    for (size_t b = 0; b < nb; ++b) {
      Index i = bounded[b];
      if (state[b] == 1) { x(i) = l(i); is_free[static_cast<size_t>(i)] = 0; }
      if (state[b] == 2) { x(i) = u(i); is_free[static_cast<size_t>(i)] = 0; }
    }
    for (Index i = 0; i < n; ++i)
      if (is_free[static_cast<size_t>(i)]) free_idx.push_back(i);

    if (!free_idx.empty()) {
      Eigen::MatrixXd Qff(free_idx.size(), free_idx.size());
      Eigen::VectorXd rhs(free_idx.size());
      for (size_t a = 0; a < free_idx.size(); ++a) {
        rhs(static_cast<Index>(a)) = -c(free_idx[a]);
        for (Index i = 0; i < n; ++i)
          if (!is_free[static_cast<size_t>(i)]) rhs(static_cast<Index>(a)) -= Q(free_idx[a], i) * x(i);
        for (size_t bb = 0; bb < free_idx.size(); ++bb) Qff(static_cast<Index>(a), static_cast<Index>(bb)) = Q(free_idx[a], free_idx[bb]);
      }
      Eigen::VectorXd xf = Qff.llt().solve(rhs);
      for (size_t a = 0; a < free_idx.size(); ++a) x(free_idx[a]) = xf(static_cast<Index>(a));
    }

    // KKT consistency: primal feasibility and multiplier signs
    bool ok = true;
    Eigen::VectorXd gkkt = Q * x + c;
    for (Index i = 0; i < n && ok; ++i) {
      if (x(i) < l(i) - 1e-9 || x(i) > u(i) + 1e-9) ok = false;
    }
    for (size_t b = 0; b < nb && ok; ++b) {
      Index i = bounded[b];
      if (state[b] == 0 && std::isfinite(l(i)) && std::isfinite(u(i))) {
        // free var must sit inside
        if (x(i) < l(i) - 1e-9 || x(i) > u(i) + 1e-9) ok = false;
      }
      if (state[b] == 1 && gkkt(i) < -1e-9) ok = false;
      if (state[b] == 2 && gkkt(i) > 1e-9) ok = false;
    }
    for (Index i = 0; i < n && ok; ++i)
      if (is_free[static_cast<size_t>(i)] && std::abs(gkkt(i)) > 1e-8) ok = false;
    if (!ok) continue;

    double viol = 0.0;  // prefer the exactly consistent assignment
    for (Index i = 0; i < n; ++i)
      if (is_free[static_cast<size_t>(i)]) viol = std::max(viol, std::abs(gkkt(i)));
    if (viol < best_violation) {
      best_violation = viol;
      best = x;
    }
  }
  REQUIRE(best.size() == n);
  return best;
}

}  // namespace

TEST_CASE("min x^2 subject to x >= 1") {
  auto nlp = scalar_nlp(1.0, kInf, 2.0, [](kernel::Graph& g, int x) { return g.mul(x, x); });
  backend::Backend b(backend::Backend::Kind::serial);
  auto sol = ipm::solve(nlp, {}, b);
  CHECK(sol.status == ipm::SolveStatus::optimal);
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(sol.z_lower[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("interior minimum inside a wide box") {
  auto nlp = scalar_nlp(-10.0, 10.0, 0.1, [](kernel::Graph& g, int x) {
    int d = g.sub(x, g.cnst(2.0));
    return g.mul(g.cnst(0.5), g.mul(d, d));
  });
  backend::Backend b(backend::Backend::Kind::serial);
  auto sol = ipm::solve(nlp, {}, b);
  CHECK(sol.status == ipm::SolveStatus::optimal);
  CHECK(sol.x[0] == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(sol.objective == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("assemble_kkt: one bounded variable, no constraints") {
  // W = 3 (f = 1.5 x^2), x = 0.5 in [0, inf), z = 2 -> Sigma = 4
  auto nlp = scalar_nlp(0.0, kInf, 0.5, [](kernel::Graph& g, int x) {
    return g.mul(g.cnst(1.5), g.mul(x, x));
  });
  backend::Backend b(backend::Backend::Kind::serial);
  ipm::detail::EvalContext ec(nlp, b);
  ipm::detail::Reduction red(nlp);
  ipm::detail::KktAssembler kkt(nlp, ec, red);
  REQUIRE(kkt.dim == 1);

  std::vector<double> x = {0.5};
  REQUIRE(ec.eval_hessian(x, {}));
  std::vector<double> sigma = {2.0 / 0.5};
  kkt.assemble(ec, sigma);
  REQUIRE(kkt.K.nnz() == 1);
  CHECK(kkt.K.val[0] == doctest::Approx(3.0 + 4.0));

  // delta_w enters through the factorization
  auto F = sparse::factorize(kkt.K, kkt.symbolic(), 0.25, 0.0, kkt.ntot);
  CHECK(F.D[0] == doctest::Approx(7.25));
  CHECK(kkt.analyze_count == 1);
}

TEST_CASE("assemble_kkt: dual block carries -delta_c entries") {
  // one variable, two equality rows c(x) = x - 1 = 0 twice
  StructuredNlp nlp;
  nlp.layout.nvar = 1;
  nlp.N = 1;
  {
    kernel::Kernel k;
    int x = k.graph.input({0, 0}, "x");
    k.roots.push_back(k.graph.sub(x, k.graph.cnst(1.0)));
    k.roots.push_back(k.graph.sub(x, k.graph.cnst(1.0)));
    kernel::Pattern pat = detect_pattern(k);
    transcribe::ConstraintGroup grp{kernel::Evaluator(std::move(k), std::move(pat)),
                                    transcribe::IndexRange{0, 1, false},
                                    2,
                                    {0.0, 0.0},
                                    {0.0, 0.0},
                                    transcribe::ConstraintGroup::Kind::boundary,
                                    0,
                                    "rows"};
    nlp.con_groups.push_back(std::move(grp));
  }
  nlp.lvar = {-kInf};
  nlp.uvar = {kInf};
  nlp.x_start = {0.0};
  nlp.lcon = {0.0, 0.0};
  nlp.ucon = {0.0, 0.0};
  nlp.m_con = 2;

  backend::Backend b(backend::Backend::Kind::serial);
  ipm::detail::EvalContext ec(nlp, b);
  ipm::detail::Reduction red(nlp);
  ipm::detail::KktAssembler kkt(nlp, ec, red);
  REQUIRE(kkt.dim == 3);  // 1 primal + 2 rows

  std::vector<double> x = {0.3}, lambda = {0.0, 0.0}, c;
  REQUIRE(ec.eval_constraints_jacobian(x, c));
  REQUIRE(ec.eval_hessian(x, lambda));
  std::vector<double> sigma = {1.0};
  kkt.assemble(ec, sigma);

  auto F = sparse::factorize(kkt.K, kkt.symbolic(), 0.0, 0.5, kkt.ntot);
  // [[1, 1, 1], [1, -.5, 0], [1, 0, -.5]] has inertia (1, 2, 0)
  CHECK(F.inertia.positive == 1);
  CHECK(F.inertia.negative == 2);
  CHECK(F.inertia.zero == 0);
}

TEST_CASE("scaling rule") {
  // steep objective: f = 1e4 * x -> scale 1e-2; gentle: f = x -> scale 1
  auto steep = scalar_nlp(-1.0, 1.0, 0.0, [](kernel::Graph& g, int x) {
    return g.mul(g.cnst(1e4), x);
  });
  backend::Backend b(backend::Backend::Kind::serial);
  ipm::detail::EvalContext ec(steep, b);
  ec.compute_scaling(steep.x_start, true);
  CHECK(ec.obj_scale == doctest::Approx(1e-2));

  auto gentle = scalar_nlp(-1.0, 1.0, 0.0, [](kernel::Graph&, int x) { return x; });
  ipm::detail::EvalContext ec2(gentle, b);
  ec2.compute_scaling(gentle.x_start, true);
  CHECK(ec2.obj_scale == 1.0);
}

TEST_CASE("double integrator solve: analytic objective") {
  auto p = dsl::parse_ocp(bench::double_integrator_source());
  auto nlp = transcribe::transcribe(p, transcribe::Scheme::trapezoid, 50);
  backend::Backend b(backend::Backend::Kind::serial);
  ipm::IpmOptions opts;
  auto sol = ipm::solve(nlp, opts, b);
  REQUIRE(sol.status == ipm::SolveStatus::optimal);
  CHECK(sol.objective == doctest::Approx(6.0).epsilon(2e-3));
  CHECK(sol.stats.symbolic_analyses == 1);
  // unscaled KKT exactness at optimal
  CHECK(sol.theta <= 10 * opts.tol);
  CHECK(sol.stationarity <= 10 * opts.tol);
}

TEST_CASE("backend parity on the double integrator") {
  auto p = dsl::parse_ocp(bench::double_integrator_source());
  auto nlp_s = transcribe::transcribe(p, transcribe::Scheme::trapezoid, 50);
  auto nlp_p = transcribe::transcribe(p, transcribe::Scheme::trapezoid, 50);
  backend::Backend bs(backend::Backend::Kind::serial);
  backend::Backend bp(backend::Backend::Kind::parallel, 7);
  auto sol_s = ipm::solve(nlp_s, {}, bs);
  auto sol_p = ipm::solve(nlp_p, {}, bp);
  REQUIRE(sol_s.status == ipm::SolveStatus::optimal);
  REQUIRE(sol_p.status == ipm::SolveStatus::optimal);
  CHECK(sol_s.iterations == sol_p.iterations);
  CHECK(std::memcmp(&sol_s.objective, &sol_p.objective, sizeof(double)) == 0);
}

TEST_CASE("convex QP oracle: IPM matches active-set enumeration") {
  std::mt19937 rng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  backend::Backend b(backend::Backend::Kind::serial);

  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 2 + static_cast<Index>(rng() % 7);  // up to 8
    Eigen::MatrixXd B = Eigen::MatrixXd::NullaryExpr(n, n, [&]() { return gauss(rng); });
    Eigen::MatrixXd Q = B.transpose() * B + static_cast<double>(n) * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd c = Eigen::VectorXd::NullaryExpr(n, [&]() { return 3.0 * gauss(rng); });
    Eigen::VectorXd l(n), u(n);
    std::vector<int> bounded;
    for (Index i = 0; i < n; ++i) {
      if (unif(rng) < 0.8) {
        l(i) = -unif(rng);
        u(i) = l(i) + 0.2 + unif(rng);
        bounded.push_back(static_cast<int>(i));
      } else {
        l(i) = -kInf;
        u(i) = kInf;
      }
    }
    Eigen::VectorXd want = active_set_oracle(Q, c, l, u, bounded);

    auto nlp = qp_nlp(Q, c, l, u);
    ipm::IpmOptions opts;
    opts.tol = 1e-11;  // active-bound gap scales with the final barrier value
    auto sol = ipm::solve(nlp, opts, b);
    REQUIRE(sol.status == ipm::SolveStatus::optimal);
    for (Index i = 0; i < n; ++i)
      CHECK(std::abs(sol.x[static_cast<size_t>(i)] - want(i)) <= 1e-7);
  }
}

TEST_CASE("max_iter status") {
  auto p = dsl::parse_ocp(bench::double_integrator_source());
  auto nlp = transcribe::transcribe(p, transcribe::Scheme::trapezoid, 10);
  backend::Backend b(backend::Backend::Kind::serial);
  ipm::IpmOptions opts;
  opts.max_iter = 1;
  auto sol = ipm::solve(nlp, opts, b);
  CHECK(sol.status == ipm::SolveStatus::max_iter);
}

TEST_CASE("structure report without solving") {
  auto p = dsl::parse_ocp(bench::goddard_source());
  auto nlp = transcribe::transcribe(p, transcribe::Scheme::trapezoid, 100);
  auto rep = ipm::analyze_structure(nlp);
  CHECK(rep.nvar == nlp.nvar());
  CHECK(rep.m_con == nlp.m_con);
  CHECK(rep.kkt_dim > rep.nvar);
  CHECK(rep.kkt_nnz > 0);
  CHECK(rep.factor_nnz > 0);
}

TEST_CASE("KKT dimension and fill bounds on the double integrator") {
  auto p = dsl::parse_ocp(bench::double_integrator_source());
  {
    // N=2: the four boundary rows fold into fixed endpoint slots, so the KKT
    // covers nvar + m_con minus one slot and one row per folded equality
    auto nlp = transcribe::transcribe(p, transcribe::Scheme::trapezoid, 2);
    auto rep = ipm::analyze_structure(nlp);
    CHECK(nlp.nvar() + nlp.m_con == 17);
    CHECK(rep.kkt_dim == 17 - 2 * 4);
  }
  {
    // N=100 regression bound: AMD keeps the factor within 3x of the KKT
    auto nlp = transcribe::transcribe(p, transcribe::Scheme::trapezoid, 100);
    auto rep = ipm::analyze_structure(nlp);
    CHECK(rep.factor_nnz > 0);
    CHECK(static_cast<double>(rep.factor_nnz) <= 3.0 * static_cast<double>(rep.kkt_nnz));
  }
}

TEST_CASE("contradictory folded boxes are reported infeasible") {
  std::string src =
      "t in [0, 1], time\n"
      "x in R, state\n"
      "u in R, control\n"
      "x(t) >= 1\n"
      "x(t) <= 0\n"
      "derivative(x)(t) == u(t)\n"
      "integral( u(t)^2 ) => min\n";
  auto p = dsl::parse_ocp(src);
  auto nlp = transcribe::transcribe(p, transcribe::Scheme::trapezoid, 4);
  backend::Backend b(backend::Backend::Kind::serial);
  auto sol = ipm::solve(nlp, {}, b);
  CHECK(sol.status == ipm::SolveStatus::infeasible_detected);
}

TEST_CASE("evaluation layer: serial and parallel(8) buffers are bitwise equal") {
  auto p = dsl::parse_ocp(bench::quadrotor_source());
  auto nlp = transcribe::transcribe(p, transcribe::Scheme::trapezoid, 1000);
  std::vector<double> x(static_cast<size_t>(nlp.nvar()));
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (auto& v : x) v = dist(rng);

  backend::Backend serial(backend::Backend::Kind::serial);
  backend::Backend par(backend::Backend::Kind::parallel, 8);
  ipm::detail::EvalContext ec_s(nlp, serial);
  ipm::detail::EvalContext ec_p(nlp, par);

  std::vector<double> c_s, c_p;
  REQUIRE(ec_s.eval_constraints_jacobian(x, c_s));
  REQUIRE(ec_p.eval_constraints_jacobian(x, c_p));
  REQUIRE(ec_s.jac_val.size() == ec_p.jac_val.size());
  CHECK(std::memcmp(ec_s.jac_val.data(), ec_p.jac_val.data(), ec_s.jac_val.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(c_s.data(), c_p.data(), c_s.size() * sizeof(double)) == 0);

  std::vector<double> lambda(static_cast<size_t>(nlp.m_con), 0.25);
  REQUIRE(ec_s.eval_hessian(x, lambda));
  REQUIRE(ec_p.eval_hessian(x, lambda));
  CHECK(std::memcmp(ec_s.hess_val.data(), ec_p.hess_val.data(), ec_s.hess_val.size() * sizeof(double)) == 0);

  double f_s = 0.0, f_p = 0.0;
  REQUIRE(ec_s.eval_objective(x, f_s));
  REQUIRE(ec_p.eval_objective(x, f_p));
  CHECK(std::memcmp(&f_s, &f_p, sizeof(double)) == 0);
}

TEST_CASE("evaluation layer: trapezoid objective quadrature through the backend") {
  auto p = dsl::parse_ocp(bench::double_integrator_source());
  auto nlp = transcribe::transcribe(p, transcribe::Scheme::trapezoid, 2);
  std::vector<double> x(static_cast<size_t>(nlp.nvar()), 0.0);
  for (kernel::Index n = 0; n <= 2; ++n) x[static_cast<size_t>(nlp.layout.slot(1, 0, n))] = 2.0;
  backend::Backend par(backend::Backend::Kind::parallel, 4);
  ipm::detail::EvalContext ec(nlp, par);
  double f = 0.0;
  REQUIRE(ec.eval_objective(x, f));
  CHECK(f == doctest::Approx(2.0).epsilon(1e-15));
}

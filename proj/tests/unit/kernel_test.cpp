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

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "octrans/kernel/evaluator.hpp"
#include "octrans/kernel/graph.hpp"

using namespace octrans::kernel;

namespace {

// layout used throughout: x is a 2x(N+1) slab at base 0, u a 1x(N+1) slab
// behind it; one trailing free slot plays the role of tf where needed
constexpr Index kN = 4;
InputAddress state_at(int comp, int off) { return {2 * off + comp, 2}; }
InputAddress control_at(int off) { return {2 * (kN + 1) + off, 1}; }

}  // namespace

TEST_CASE("pattern: trapezoid residual of xdot1 = x2") {
  // (x1[i+1] - x1[i]) - h/2 * (x2[i] + x2[i+1])
  Kernel k;
  Graph& g = k.graph;
  int x1_i = g.input(state_at(0, 0));
  int x1_n = g.input(state_at(0, 1));
  int x2_i = g.input(state_at(1, 0));
  int x2_n = g.input(state_at(1, 1));
  int h2 = g.cnst(0.25);
  k.roots.push_back(g.sub(g.sub(x1_n, x1_i), g.mul(h2, g.add(x2_i, x2_n))));

  Pattern p = detect_pattern(k);
  CHECK(p.jac.size() == 4);
  CHECK(p.hess.empty());
}

TEST_CASE("pattern: half u squared") {
  Kernel k;
  Graph& g = k.graph;
  int u = g.input(control_at(0));
  k.roots.push_back(g.mul(g.cnst(0.5), g.mul(u, u)));
  Pattern p = detect_pattern(k);
  REQUIRE(p.jac.size() == 1);
  CHECK(p.jac[0] == std::pair<int, int>{0, 0});
  REQUIRE(p.hess.size() == 1);
  CHECK(p.hess[0] == std::pair<int, int>{0, 0});
}

TEST_CASE("pattern: goddard drag term has a dense 3x3 lower triangle") {
  // -Cd * v^2 * exp(-beta * (r - 1)) / m over inputs (r, v, m)
  Kernel k;
  Graph& g = k.graph;
  int r = g.input(state_at(0, 0));
  int v = g.input(state_at(1, 0));
  int m = g.input({2, 2});
  int cd = g.cnst(310.0);
  int beta = g.cnst(500.0);
  int arg = g.neg(g.mul(beta, g.sub(r, g.cnst(1.0))));
  int drag = g.neg(g.div(g.mul(g.mul(cd, g.pow(v, 2.0)), g.unary(Op::exp, arg)), m));
  k.roots.push_back(drag);

  Pattern p = detect_pattern(k);
  CHECK(p.jac.size() == 3);
  CHECK(p.hess.size() == 6);  // all pairs over {r, v, m}
}

TEST_CASE("derivative: d/du of half u squared at u = 3") {
  Kernel k;
  Graph& g = k.graph;
  int u = g.input({0, 0});
  k.roots.push_back(g.mul(g.cnst(0.5), g.mul(u, u)));
  Pattern pat = detect_pattern(k);
  Evaluator ev(std::move(k), std::move(pat));
  auto ws = ev.make_workspace();

  std::vector<double> x = {3.0};
  double jac[1];
  REQUIRE(ev.eval_jacobian(x, 0, jac, ws));
  CHECK(jac[0] == doctest::Approx(3.0));

  double w = 1.0, hess[1];
  REQUIRE(ev.eval_hessian(x, 0, &w, hess, ws));
  CHECK(hess[0] == doctest::Approx(1.0));
}

TEST_CASE("derivative: constant kernel has empty gradient") {
  Kernel k;
  Graph& g = k.graph;
  int u = g.input({0, 0});
  (void)u;
  k.roots.push_back(g.cnst(7.5));
  Pattern p = detect_pattern(k);
  CHECK(p.jac.empty());
  CHECK(p.hess.empty());
}

TEST_CASE("derivative: euler residual jacobian row") {
  // X1 - X0 - h * U0, h = 0.1, wrt (X0, X1, U0) -> (-1, 1, -0.1)
  Kernel k;
  Graph& g = k.graph;
  int x0 = g.input({0, 1});
  int x1 = g.input({1, 1});
  int u0 = g.input({10, 1});
  k.roots.push_back(g.sub(g.sub(x1, x0), g.mul(g.cnst(0.1), u0)));
  Evaluator ev(k, detect_pattern(k));
  auto ws = ev.make_workspace();

  std::vector<double> x(12, 0.0);
  x[0] = 1.0;
  x[1] = 1.2;
  x[10] = 2.0;
  double out[1];
  REQUIRE(ev.eval_values(x, 0, out, ws));
  CHECK(out[0] == doctest::Approx(1.2 - 1.0 - 0.1 * 2.0));

  double jac[3];
  REQUIRE(ev.eval_jacobian(x, 0, jac, ws));
  // pattern is sorted by input ordinal: x0, x1, u0
  CHECK(jac[0] == doctest::Approx(-1.0));
  CHECK(jac[1] == doctest::Approx(1.0));
  CHECK(jac[2] == doctest::Approx(-0.1));
}

namespace {

// goddard v-dynamics kernel over (r, v, m, u, tf): full trapezoid-style
// nonlinearity for the oracle checks
Evaluator make_drag_evaluator() {
  Kernel k;
  Graph& g = k.graph;
  int r = g.input({0, 0}, "r");
  int v = g.input({1, 0}, "v");
  int m = g.input({2, 0}, "m");
  int u = g.input({3, 0}, "u");
  int tf = g.input({4, 0}, "tf");
  int drag = g.neg(g.div(
      g.mul(g.mul(g.cnst(310.0), g.pow(v, 2.0)), g.unary(Op::exp, g.mul(g.cnst(-500.0), g.sub(r, g.cnst(1.0))))),
      m));
  int grav = g.div(g.cnst(1.0), g.pow(r, 2.0));
  int thrust = g.div(g.mul(u, g.cnst(3.5)), m);
  int f = g.sub(g.add(drag, thrust), grav);
  // scale by h = tf / N to pull the free slot into the stencil
  k.roots.push_back(g.mul(g.mul(tf, g.cnst(0.25)), f));
  return Evaluator(k, detect_pattern(k));
}

}  // namespace

TEST_CASE("oracle: AD matches central finite differences") {
  Evaluator ev = make_drag_evaluator();
  auto ws = ev.make_workspace();
  const auto& pat = ev.pattern();

  std::mt19937 rng(42);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  const double step = 1e-6;

  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> x = {1.0 + 0.01 * dist(rng), 0.01 + 0.09 * dist(rng), 0.6 + 0.4 * dist(rng),
                             dist(rng), 0.1 + 0.1 * dist(rng)};

    std::vector<double> jac(pat.jac.size());
    REQUIRE(ev.eval_jacobian(x, 0, jac.data(), ws));
    for (size_t e = 0; e < pat.jac.size(); ++e) {
      int j = pat.jac[e].second;
      std::vector<double> xp = x, xm = x;
      xp[static_cast<size_t>(j)] += step;
      xm[static_cast<size_t>(j)] -= step;
      double fp, fm;
      REQUIRE(ev.eval_values(xp, 0, &fp, ws));
      REQUIRE(ev.eval_values(xm, 0, &fm, ws));
      double fd = (fp - fm) / (2 * step);
      double denom = std::max(1.0, std::abs(fd));
      CHECK(std::abs(jac[e] - fd) / denom <= 1e-6);
    }

    // hessian vs FD of the AD gradient
    double w = 1.0;
    std::vector<double> hess(pat.hess.size());
    REQUIRE(ev.eval_hessian(x, 0, &w, hess.data(), ws));
    for (size_t e = 0; e < pat.hess.size(); ++e) {
      auto [i, j] = pat.hess[e];
      std::vector<double> xp = x, xm = x;
      xp[static_cast<size_t>(j)] += step;
      xm[static_cast<size_t>(j)] -= step;
      std::vector<double> gp(pat.jac.size()), gm(pat.jac.size());
      REQUIRE(ev.eval_jacobian(xp, 0, gp.data(), ws));
      REQUIRE(ev.eval_jacobian(xm, 0, gm.data(), ws));
      // find gradient entry for input i
      double fd = 0;
      for (size_t q = 0; q < pat.jac.size(); ++q)
        if (pat.jac[q].second == i) fd = (gp[q] - gm[q]) / (2 * step);
      double denom = std::max(1.0, std::abs(fd));
      CHECK(std::abs(hess[e] - fd) / denom <= 1e-5);
    }
  }
}

TEST_CASE("oracle: FD-detected nonzeros are contained in the pattern") {
  Evaluator ev = make_drag_evaluator();
  auto ws = ev.make_workspace();
  const auto& pat = ev.pattern();
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(0.2, 1.0);

  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> x(5);
    for (auto& v : x) v = dist(rng);
    for (int j = 0; j < 5; ++j) {
      std::vector<double> xp = x, xm = x;
      xp[static_cast<size_t>(j)] += 1e-6;
      xm[static_cast<size_t>(j)] -= 1e-6;
      double fp, fm;
      REQUIRE(ev.eval_values(xp, 0, &fp, ws));
      REQUIRE(ev.eval_values(xm, 0, &fm, ws));
      if (std::abs(fp - fm) / 2e-6 > 1e-12) {
        bool in_pattern = false;
        for (auto& [row, in] : pat.jac) in_pattern |= in == j;
        CHECK(in_pattern);
      }
    }
  }
}

TEST_CASE("determinism: evaluations are bitwise identical") {
  Evaluator ev = make_drag_evaluator();
  auto ws1 = ev.make_workspace();
  auto ws2 = ev.make_workspace();
  std::vector<double> x = {1.05, 0.08, 0.7, 0.3, 0.2};
  std::vector<double> j1(ev.pattern().jac.size()), j2(j1.size());
  REQUIRE(ev.eval_jacobian(x, 0, j1.data(), ws1));
  REQUIRE(ev.eval_jacobian(x, 0, j2.data(), ws2));
  CHECK(std::memcmp(j1.data(), j2.data(), j1.size() * sizeof(double)) == 0);
}

TEST_CASE("evaluation performs no buffer growth") {
  Evaluator ev = make_drag_evaluator();
  auto ws = ev.make_workspace();
  std::vector<double> x = {1.05, 0.08, 0.7, 0.3, 0.2};
  std::vector<double> jac(ev.pattern().jac.size());
  std::vector<double> hess(ev.pattern().hess.size());
  double w = 1.0, out;
  size_t cap0 = ws.capacity();
  for (int it = 0; it < 1000; ++it) {
    ev.eval_values(x, 0, &out, ws);
    ev.eval_jacobian(x, 0, jac.data(), ws);
    ev.eval_hessian(x, 0, &w, hess.data(), ws);
  }
  CHECK(ws.capacity() == cap0);
}

TEST_CASE("domain errors are flagged") {
  Kernel k;
  Graph& g = k.graph;
  int u = g.input({0, 0});
  k.roots.push_back(g.unary(Op::log, u));
  Evaluator ev(k, detect_pattern(k));
  auto ws = ev.make_workspace();
  double out;
  std::vector<double> bad = {-1.0};
  CHECK(!ev.eval_values(bad, 0, &out, ws));
  std::vector<double> good = {2.0};
  CHECK(ev.eval_values(good, 0, &out, ws));
  CHECK(out == doctest::Approx(std::log(2.0)));

  // non-integer power of a negative base
  Kernel k2;
  int u2 = k2.graph.input({0, 0});
  k2.roots.push_back(k2.graph.pow(u2, 1.5));
  Evaluator ev2(k2, detect_pattern(k2));
  auto ws2 = ev2.make_workspace();
  CHECK(!ev2.eval_values(bad, 0, &out, ws2));
}

TEST_CASE("index node feeds the time value") {
  // kernel: sin(t_i) with t_i = (i + 1) * h, h = 0.5
  Kernel k;
  Graph& g = k.graph;
  int ti = g.mul(g.index(1.0), g.cnst(0.5));
  k.roots.push_back(g.unary(Op::sin, ti));
  Evaluator ev(k, detect_pattern(k));
  auto ws = ev.make_workspace();
  std::vector<double> x = {0.0};
  double out;
  REQUIRE(ev.eval_values(x, 3, &out, ws));
  CHECK(out == doctest::Approx(std::sin(2.0)));
}

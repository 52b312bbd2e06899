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
#include <fstream>
#include <sstream>
#include <vector>

#include "octrans/bench/problems.hpp"
#include "octrans/dsl/parser.hpp"
#include "octrans/transcribe/transcribe.hpp"

using namespace octrans::transcribe;
namespace bench = octrans::bench;
namespace dsl = octrans::dsl;

namespace {

std::vector<double> eval_residuals(const StructuredNlp& nlp, const std::vector<double>& x) {
  std::vector<double> r(static_cast<size_t>(nlp.m_con), 0.0);
  for (const auto& grp : nlp.con_groups) {
    auto ws = grp.eval.make_workspace();
    for (Index k = 0; k < grp.range.count(); ++k) {
      REQUIRE(grp.eval.eval_values(x, grp.range.at(k), &r[static_cast<size_t>(grp.row_base + k * grp.out_dim)], ws));
    }
  }
  return r;
}

double eval_objective(const StructuredNlp& nlp, const std::vector<double>& x) {
  double total = 0.0;
  for (const auto& grp : nlp.obj_groups) {
    auto ws = grp.eval.make_workspace();
    for (Index k = 0; k < grp.range.count(); ++k) {
      double v;
      REQUIRE(grp.eval.eval_values(x, grp.range.at(k), &v, ws));
      total += grp.weight * v;
    }
  }
  return total;
}

StructuredNlp make_di(Scheme s, Index N) {
  auto p = dsl::parse_ocp(bench::double_integrator_source());
  return transcribe(p, s, N);
}

}  // namespace

TEST_CASE("trapezoid residual matches hand arithmetic (double integrator, N=2)") {
  StructuredNlp nlp = make_di(Scheme::trapezoid, 2);
  // x1 = (-1, -0.75, 0), x2 = (0, 1, 0), u arbitrary
  std::vector<double> x(static_cast<size_t>(nlp.nvar()), 0.0);
  auto sl = [&](int comp, Index node) { return static_cast<size_t>(nlp.layout.slot(0, comp, node)); };
  x[sl(0, 0)] = -1.0;
  x[sl(0, 1)] = -0.75;
  x[sl(0, 2)] = 0.0;
  x[sl(1, 0)] = 0.0;
  x[sl(1, 1)] = 1.0;
  x[sl(1, 2)] = 0.0;

  auto r = eval_residuals(nlp, x);
  // first dynamics group (x1 equation), index j=0
  CHECK(r[0] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("euler residual matches hand arithmetic") {
  std::string src =
      "t in [0, 1], time\n"
      "x in R, state\n"
      "u in R, control\n"
      "x(0) == 1\n"
      "derivative(x)(t) == u(t)\n"
      "integral( u(t)^2 ) => min\n";
  auto p = dsl::parse_ocp(src);
  StructuredNlp nlp = transcribe(p, Scheme::euler, 10);  // h = 0.1
  std::vector<double> x(static_cast<size_t>(nlp.nvar()), 0.0);
  x[static_cast<size_t>(nlp.layout.slot(0, 0, 0))] = 1.0;
  x[static_cast<size_t>(nlp.layout.slot(0, 0, 1))] = 1.2;
  x[static_cast<size_t>(nlp.layout.slot(1, 0, 0))] = 2.0;
  auto r = eval_residuals(nlp, x);
  CHECK(r[0] == doctest::Approx(1.2 - 1.0 - 0.1 * 2.0).epsilon(1e-15));
}

TEST_CASE("trapezoid objective quadrature (u constant 2, N=2)") {
  StructuredNlp nlp = make_di(Scheme::trapezoid, 2);
  std::vector<double> x(static_cast<size_t>(nlp.nvar()), 0.0);
  for (Index n = 0; n <= 2; ++n) x[static_cast<size_t>(nlp.layout.slot(1, 0, n))] = 2.0;
  CHECK(eval_objective(nlp, x) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("dimension formula: double integrator N=2") {
  StructuredNlp nlp = make_di(Scheme::trapezoid, 2);
  CHECK(nlp.nvar() == 9);   // 2*3 + 1*3
  CHECK(nlp.m_con == 8);    // 2 dynamics rows * 2 steps + 4 boundary rows
}

TEST_CASE("problem sizes: goddard is 10N + 12, quadrotor 22N + 22") {
  auto goddard = dsl::parse_ocp(bench::goddard_source());
  auto quadrotor = dsl::parse_ocp(bench::quadrotor_source());
  for (Index N : {100, 1000}) {
    StructuredNlp g = transcribe(goddard, Scheme::trapezoid, N);
    CHECK(g.nvar() + g.m_con == 10 * N + 12);
    CHECK(std::abs(g.nvar() + g.m_con - 10 * N) <= 12);
    StructuredNlp q = transcribe(quadrotor, Scheme::trapezoid, N);
    CHECK(q.nvar() + q.m_con == 22 * N + 22);
  }
}

TEST_CASE("initial point: defaults, clipping, per-slab vectors") {
  auto p = dsl::parse_ocp(bench::double_integrator_source());
  StructuredNlp nlp = transcribe(p, Scheme::trapezoid, 4);
  for (double v : nlp.x_start) CHECK(v == 0.1);

  // per-slab override
  InitPolicy pol;
  pol.per_decl["x"] = {-0.5, 0.25};
  initial_point(nlp, p, pol);
  CHECK(nlp.x_start[static_cast<size_t>(nlp.layout.slot(0, 0, 2))] == -0.5);
  CHECK(nlp.x_start[static_cast<size_t>(nlp.layout.slot(0, 1, 2))] == 0.25);

  // wrong length rejected
  InitPolicy bad;
  bad.per_decl["x"] = {1.0};
  CHECK_THROWS_AS(initial_point(nlp, p, bad), std::invalid_argument);

  // clipping against variable bounds
  std::string src =
      "tf in R, variable\n"
      "t in [0, tf], time\n"
      "x in R, state\n"
      "u in R, control\n"
      "x(0) == 0\n"
      "tf >= 0.5\n"
      "derivative(x)(t) == u(t)\n"
      "integral( u(t)^2 ) => min\n";
  auto p2 = dsl::parse_ocp(src);
  StructuredNlp nlp2 = transcribe(p2, Scheme::trapezoid, 4);
  Index tf_slot = nlp2.layout.var_slot(0, 0);
  CHECK(nlp2.lvar[static_cast<size_t>(tf_slot)] == 0.5);
  CHECK(nlp2.x_start[static_cast<size_t>(tf_slot)] == 0.5);  // 0.1 clipped up
}

TEST_CASE("goddard start value inside control range stays put") {
  auto p = dsl::parse_ocp(bench::goddard_source());
  StructuredNlp nlp = transcribe(p, Scheme::trapezoid, 8);
  // decls: tf = 0, x = 1, u = 2
  for (Index n = 0; n <= 8; ++n)
    CHECK(nlp.x_start[static_cast<size_t>(nlp.layout.slot(2, 0, n))] == 0.1);
}

TEST_CASE("zero dynamics: constant trajectories have zero residual under both schemes") {
  std::string src =
      "t in [0, 1], time\n"
      "x in R^2, state\n"
      "u in R, control\n"
      "x(0) == [3, -4]\n"
      "derivative(x1)(t) == 0\n"
      "derivative(x2)(t) == 0\n"
      "integral( u(t)^2 ) => min\n";
  auto p = dsl::parse_ocp(src);
  for (Scheme s : {Scheme::euler, Scheme::trapezoid}) {
    StructuredNlp nlp = transcribe(p, s, 6);
    std::vector<double> x(static_cast<size_t>(nlp.nvar()), 0.0);
    for (Index n = 0; n <= 6; ++n) {
      x[static_cast<size_t>(nlp.layout.slot(0, 0, n))] = 3.0;
      x[static_cast<size_t>(nlp.layout.slot(0, 1, n))] = -4.0;
    }
    auto r = eval_residuals(nlp, x);
    for (Index row = 0; row < 12; ++row) CHECK(r[static_cast<size_t>(row)] == 0.0);
  }
}

TEST_CASE("scheme consistency: trapezoid residual of the analytic optimum is order >= 1.9") {
  // analytic double-integrator solution: u = 6 - 12t, x2 = 6t^2... see below
  auto p = dsl::parse_ocp(bench::double_integrator_source());
  auto max_residual = [&](Index N) {
    StructuredNlp nlp = transcribe(p, Scheme::trapezoid, N);
    std::vector<double> x(static_cast<size_t>(nlp.nvar()));
    double h = 1.0 / static_cast<double>(N);
    for (Index n = 0; n <= N; ++n) {
      double t = h * static_cast<double>(n);
      x[static_cast<size_t>(nlp.layout.slot(0, 0, n))] = -1.0 + 3 * t * t - 2 * t * t * t;
      x[static_cast<size_t>(nlp.layout.slot(0, 1, n))] = 6 * t - 6 * t * t;
      x[static_cast<size_t>(nlp.layout.slot(1, 0, n))] = 6 - 12 * t;
    }
    auto r = eval_residuals(nlp, x);
    double m = 0.0;
    for (Index row = 0; row < 2 * N; ++row) m = std::max(m, std::abs(r[static_cast<size_t>(row)]));
    return m;
  };
  double prev = max_residual(8);
  for (Index N : {16, 32, 64}) {
    double cur = max_residual(N);
    double order = std::log2(prev / cur);
    CHECK(order >= 1.9);
    prev = cur;
  }
}

TEST_CASE("free horizon: tf enters every dynamics row") {
  auto p = dsl::parse_ocp(bench::goddard_source());
  StructuredNlp nlp = transcribe(p, Scheme::trapezoid, 5);
  std::vector<double> x(static_cast<size_t>(nlp.nvar()), 0.5);
  Index tf_slot = nlp.layout.var_slot(0, 0);
  x[static_cast<size_t>(tf_slot)] = 0.2;
  auto r1 = eval_residuals(nlp, x);
  x[static_cast<size_t>(tf_slot)] = 0.25;
  auto r2 = eval_residuals(nlp, x);
  for (Index row = 0; row < 15; ++row)  // 3 dynamics groups * 5 steps
    CHECK(r1[static_cast<size_t>(row)] != r2[static_cast<size_t>(row)]);
}

TEST_CASE("fixed horizon: rows only react to their own stencil") {
  StructuredNlp nlp = make_di(Scheme::trapezoid, 6);
  std::vector<double> x(static_cast<size_t>(nlp.nvar()), 0.3);
  auto r1 = eval_residuals(nlp, x);
  // perturb x1 at node 5: dynamics rows for steps 4 and 5 of group 0 react
  x[static_cast<size_t>(nlp.layout.slot(0, 0, 5))] += 0.125;
  auto r2 = eval_residuals(nlp, x);
  for (Index row = 0; row < nlp.m_con; ++row) {
    bool changed = r1[static_cast<size_t>(row)] != r2[static_cast<size_t>(row)];
    bool expected = row == 4 || row == 5;  // group 0 rows are 0..5
    CHECK(changed == expected);
  }
}

TEST_CASE("generator locality: dynamics stencils touch only adjacent nodes") {
  auto p = dsl::parse_ocp(bench::goddard_source());
  for (Scheme s : {Scheme::euler, Scheme::trapezoid}) {
    StructuredNlp nlp = transcribe(p, s, 7);
    const auto& x_slab = nlp.layout.slabs[1];
    const auto& u_slab = nlp.layout.slabs[2];
    for (const auto& grp : nlp.con_groups) {
      if (grp.kind != ConstraintGroup::Kind::dynamics) continue;
      for (const auto& addr : grp.eval.kernel().graph.inputs()) {
        if (addr.stride == 0) {
          CHECK(addr.base == nlp.layout.var_slot(0, 0));  // the free tf slot
        } else {
          bool in_x = addr.base >= x_slab.base && addr.base < u_slab.base;
          Index slab_base = in_x ? x_slab.base : u_slab.base;
          Index dim = in_x ? x_slab.dim : u_slab.dim;
          Index off = (addr.base - slab_base) / dim;  // node offset folded into base
          CHECK(off >= 0);
          CHECK(off <= 1);
        }
      }
    }
  }
}

TEST_CASE("euler pins the unused final control node") {
  StructuredNlp nlp = make_di(Scheme::euler, 5);
  Index slot = nlp.layout.slot(1, 0, 5);
  CHECK(nlp.lvar[static_cast<size_t>(slot)] == 0.1);
  CHECK(nlp.uvar[static_cast<size_t>(slot)] == 0.1);
  // trapezoid leaves it free
  StructuredNlp nlp2 = make_di(Scheme::trapezoid, 5);
  CHECK(nlp2.lvar[static_cast<size_t>(nlp2.layout.slot(1, 0, 5))] ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("euler ranges control-only path constraints over 0..N-1") {
  auto p = dsl::parse_ocp(bench::goddard_source());
  StructuredNlp e = transcribe(p, Scheme::euler, 10);
  StructuredNlp t = transcribe(p, Scheme::trapezoid, 10);
  auto rows_of = [](const StructuredNlp& nlp, const char* label_part) {
    for (const auto& g : nlp.con_groups)
      if (g.label.find(label_part) != std::string::npos && g.kind == ConstraintGroup::Kind::path &&
          g.eval.kernel().graph.inputs().size() == 1)
        return g.range.count();
    return Index(-1);
  };
  // the u box row group (path, single control input)
  Index eu = -1, tu = -1;
  for (const auto& g : e.con_groups)
    if (g.kind == ConstraintGroup::Kind::path && g.eval.kernel().graph.inputs().size() == 1 &&
        g.eval.kernel().graph.inputs()[0].stride == 1)
      eu = g.range.count();
  for (const auto& g : t.con_groups)
    if (g.kind == ConstraintGroup::Kind::path && g.eval.kernel().graph.inputs().size() == 1 &&
        g.eval.kernel().graph.inputs()[0].stride == 1)
      tu = g.range.count();
  CHECK(eu == 10);
  CHECK(tu == 11);
  (void)rows_of;
}

TEST_CASE("transcribe rejects N = 0") {
  auto p = dsl::parse_ocp(bench::double_integrator_source());
  CHECK_THROWS_AS(transcribe(p, Scheme::trapezoid, 0), std::invalid_argument);
}

TEST_CASE("max-sense problems are negated with the flag recorded") {
  auto p = dsl::parse_ocp(bench::goddard_source());
  StructuredNlp nlp = transcribe(p, Scheme::trapezoid, 4);
  CHECK(nlp.maximize);
  // mayer group value at r(tf) = 1.05 must be -1.05 (x is decl 1, r is comp 0)
  std::vector<double> x(static_cast<size_t>(nlp.nvar()), 0.5);
  x[static_cast<size_t>(nlp.layout.slot(1, 0, 4))] = 1.05;
  double obj = 0.0;
  for (const auto& g : nlp.obj_groups) {
    auto ws = g.eval.make_workspace();
    double v;
    REQUIRE(g.eval.eval_values(x, 0, &v, ws));
    obj += g.weight * v;
  }
  CHECK(obj == doctest::Approx(-1.05));
}

TEST_CASE("debug dump golden (double integrator, N=2)") {
  auto p = dsl::parse_ocp(bench::double_integrator_source());
  StructuredNlp nlp = transcribe(p, Scheme::trapezoid, 2);
  std::ostringstream os;
  nlp.dump(os);
  std::ifstream golden(std::string(GOLDEN_DIR) + "/double_integrator_n2_nlp.json");
  REQUIRE(golden.good());
  std::stringstream want;
  want << golden.rdbuf();
  CHECK(os.str() == want.str());
}

TEST_CASE("boxes_as_bounds compiles single-slot path bounds into lvar/uvar") {
  auto p = dsl::parse_ocp(bench::goddard_source());
  TranscribeOptions topt;
  topt.boxes_as_bounds = true;
  StructuredNlp nlp = transcribe(p, Scheme::trapezoid, 100, topt);
  // u, r, v boxes leave the row set: only dynamics and boundary rows remain
  CHECK(nlp.nvar() + nlp.m_con == 7 * 100 + 9);
  Index u0 = nlp.layout.slot(2, 0, 0);
  CHECK(nlp.lvar[static_cast<size_t>(u0)] == 0.0);
  CHECK(nlp.uvar[static_cast<size_t>(u0)] == 1.0);
  for (const auto& g : nlp.con_groups)
    CHECK(g.kind != ConstraintGroup::Kind::path);  // every path row was a box
}

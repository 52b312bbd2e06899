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

#include "octrans/bench/problems.hpp"

namespace octrans::bench {

namespace {

// Energy-minimal double integrator on a fixed unit horizon.
constexpr std::string_view kDoubleIntegrator = R"(# double integrator, minimum control energy
t in [0, 1], time
x in R^2, state
u in R, control

x(0) == [-1, 0]
x(1) == [0, 0]

derivative(x1)(t) == x2(t)
derivative(x2)(t) == u(t)

integral( 0.5u(t)^2 ) => min
)";

// Goddard ascent with free final time, drag, and a mass flow bound.
constexpr std::string_view kGoddard = R"(# Goddard rocket, maximum final altitude
r0 = 1.0
v0 = 0.0
m0 = 1.0
vmax = 0.1
mf = 0.6
Cd = 310.0
Tmax = 3.5
beta = 500.0
b = 2.0

tf in R, variable
t in [0, tf], time
x = (r, v, m) in R^3, state
u in R, control

x(0) == [r0, v0, m0]
m(tf) == mf
0 <= u(t) <= 1
r(t) >= r0
0 <= v(t) <= vmax

derivative(r)(t) == v(t)
derivative(v)(t) == -Cd * v(t)^2 * exp(-beta * (r(t) - 1)) / m(t) - 1 / r(t)^2 + u(t) * Tmax / m(t)
derivative(m)(t) == -b * Tmax * u(t)

r(tf) => max
)";

// Quadrotor tracking problem with strongly nonlinear attitude dynamics.
constexpr std::string_view kQuadrotor = R"(# quadrotor, reference tracking
T = 1
g = 9.8
r = 0.1

t in [0, T], time
x in R^9, state
u in R^4, control

x(0) == zeros(9)

derivative(x1)(t) == x2(t)
derivative(x2)(t) == u1(t) * cos(x7(t)) * sin(x8(t)) * cos(x9(t)) + u1(t) * sin(x7(t)) * sin(x9(t))
derivative(x3)(t) == x4(t)
derivative(x4)(t) == u1(t) * cos(x7(t)) * sin(x8(t)) * sin(x9(t)) - u1(t) * sin(x7(t)) * cos(x9(t))
derivative(x5)(t) == x6(t)
derivative(x6)(t) == u1(t) * cos(x7(t)) * cos(x8(t)) - g
derivative(x7)(t) == u2(t) * cos(x7(t)) / cos(x8(t)) + u3(t) * sin(x7(t)) / cos(x8(t))
derivative(x8)(t) == -u2(t) * sin(x7(t)) + u3(t) * cos(x7(t))
derivative(x9)(t) == u2(t) * cos(x7(t)) * tan(x8(t)) + u3(t) * sin(x7(t)) * tan(x8(t)) + u4(t)

dt1 = sin(2pi * t / T)
dt3 = 2sin(4pi * t / T)
dt5 = 2t / T

0.5integral( (x1(t) - dt1)^2 + (x3(t) - dt3)^2 + (x5(t) - dt5)^2 + x7(t)^2 + x8(t)^2 + x9(t)^2 + r * (u1(t)^2 + u2(t)^2 + u3(t)^2 + u4(t)^2) ) => min
)";

}  // namespace

std::string_view double_integrator_source() { return kDoubleIntegrator; }
std::string_view goddard_source() { return kGoddard; }
std::string_view quadrotor_source() { return kQuadrotor; }

const char* embedded_source(std::string_view name) {
  if (name == "double_integrator") return kDoubleIntegrator.data();
  if (name == "goddard") return kGoddard.data();
  if (name == "quadrotor") return kQuadrotor.data();
  return nullptr;
}

std::vector<std::string_view> embedded_names() {
  return {"double_integrator", "goddard", "quadrotor"};
}

}  // namespace octrans::bench

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

#include "octrans/kernel/evaluator.hpp"

#include <cmath>

namespace octrans::kernel {

Evaluator::Evaluator(Kernel kernel, Pattern pattern)
    : kernel_(std::move(kernel)), pattern_(std::move(pattern)) {
  jac_row_ptr_.assign(static_cast<size_t>(pattern_.out_dim) + 1, 0);
  for (const auto& [r, j] : pattern_.jac) jac_row_ptr_[static_cast<size_t>(r) + 1]++;
  for (int r = 0; r < pattern_.out_dim; ++r)
    jac_row_ptr_[static_cast<size_t>(r) + 1] += jac_row_ptr_[static_cast<size_t>(r)];
  input_node_.assign(static_cast<size_t>(pattern_.n_inputs), -1);
  const auto& nodes = kernel_.graph.nodes();
  for (size_t k = 0; k < nodes.size(); ++k)
    if (nodes[k].op == Op::input) input_node_[static_cast<size_t>(nodes[k].a)] = static_cast<int>(k);
}

Evaluator::Workspace Evaluator::make_workspace() const {
  Workspace ws;
  const size_t n = kernel_.graph.nodes().size();
  ws.v.resize(n);
  ws.p1.resize(n);
  ws.p2.resize(n);
  ws.dv.resize(n);
  ws.av.resize(n);
  ws.ad.resize(n);
  return ws;
}

bool Evaluator::forward(std::span<const double> x, Index idx, Workspace& ws, bool partials) const {
  const auto& nodes = kernel_.graph.nodes();
  const auto& inputs = kernel_.graph.inputs();
  double* v = ws.v.data();
  double* p1 = ws.p1.data();
  double* p2 = ws.p2.data();
  bool ok = true;

  for (size_t k = 0; k < nodes.size(); ++k) {
    const Node& nd = nodes[k];
    double r = 0.0, q1 = 0.0, q2 = 0.0;
    switch (nd.op) {
      case Op::cnst: r = nd.c; break;
      case Op::input: r = x[static_cast<size_t>(inputs[static_cast<size_t>(nd.a)].slot(idx))]; break;
      case Op::index: r = static_cast<double>(idx) + nd.c; break;
      case Op::add: r = v[nd.a] + v[nd.b]; q1 = 1.0; q2 = 1.0; break;
      case Op::sub: r = v[nd.a] - v[nd.b]; q1 = 1.0; q2 = -1.0; break;
      case Op::mul: r = v[nd.a] * v[nd.b]; q1 = v[nd.b]; q2 = v[nd.a]; break;
      case Op::div: r = v[nd.a] / v[nd.b]; q1 = 1.0 / v[nd.b]; q2 = -r / v[nd.b]; break;
      case Op::neg: r = -v[nd.a]; q1 = -1.0; break;
      case Op::sin: r = std::sin(v[nd.a]); q1 = std::cos(v[nd.a]); break;
      case Op::cos: r = std::cos(v[nd.a]); q1 = -std::sin(v[nd.a]); break;
      case Op::tan: r = std::tan(v[nd.a]); q1 = 1.0 + r * r; break;
      case Op::exp: r = std::exp(v[nd.a]); q1 = r; break;
      case Op::log: r = std::log(v[nd.a]); q1 = 1.0 / v[nd.a]; break;
      case Op::sqrt: r = std::sqrt(v[nd.a]); q1 = 0.5 / r; break;
      case Op::pow:
        r = std::pow(v[nd.a], nd.c);
        q1 = nd.c * std::pow(v[nd.a], nd.c - 1.0);
        break;
    }
    v[k] = r;
    ok &= std::isfinite(r);
    if (partials) {
      p1[k] = q1;
      p2[k] = q2;
      ok &= nd.op < Op::add || (std::isfinite(q1) && std::isfinite(q2));
    }
  }
  return ok;
}

bool Evaluator::eval_values(std::span<const double> x, Index i, double* out, Workspace& ws) const {
  bool ok = forward(x, i, ws, /*partials=*/false);
  for (size_t r = 0; r < kernel_.roots.size(); ++r)
    out[r] = ws.v[static_cast<size_t>(kernel_.roots[r])];
  return ok;
}

void Evaluator::reverse_row(int root, double* grad_out, Workspace& ws) const {
  const auto& nodes = kernel_.graph.nodes();
  double* a = ws.av.data();
  std::fill(ws.av.begin(), ws.av.end(), 0.0);
  a[root] = 1.0;
  for (size_t k = nodes.size(); k-- > 0;) {
    const double ak = a[k];
    if (ak == 0.0) continue;
    const Node& nd = nodes[k];
    if (nd.op == Op::input) {
      grad_out[nd.a] += ak;
    } else if (nd.a >= 0) {
      a[nd.a] += ak * ws.p1[k];
      if (nd.b >= 0) a[nd.b] += ak * ws.p2[k];
    }
  }
}

bool Evaluator::jacobian_rows(double* jac, Workspace& ws) const {
  bool ok = true;
  for (int r = 0; r < pattern_.out_dim; ++r) {
    const int lo = jac_row_ptr_[static_cast<size_t>(r)];
    const int hi = jac_row_ptr_[static_cast<size_t>(r) + 1];
    if (lo == hi) continue;
    double* grad = ws.dv.data();  // reused as dense stencil-gradient scratch
    std::fill(grad, grad + pattern_.n_inputs, 0.0);
    reverse_row(kernel_.roots[static_cast<size_t>(r)], grad, ws);
    for (int e = lo; e < hi; ++e) {
      double g = grad[pattern_.jac[static_cast<size_t>(e)].second];
      jac[e] = g;
      ok &= std::isfinite(g);
    }
  }
  return ok;
}

bool Evaluator::eval_jacobian(std::span<const double> x, Index i, double* jac, Workspace& ws) const {
  if (!forward(x, i, ws, /*partials=*/true)) return false;
  return jacobian_rows(jac, ws);
}

bool Evaluator::eval_values_jacobian(std::span<const double> x, Index i, double* out, double* jac,
                                     Workspace& ws) const {
  if (!forward(x, i, ws, /*partials=*/true)) return false;
  for (size_t r = 0; r < kernel_.roots.size(); ++r)
    out[r] = ws.v[static_cast<size_t>(kernel_.roots[r])];
  return jacobian_rows(jac, ws);
}

// One forward-over-reverse pass: seeds direction j, leaves d(adjoint)/d(x_j)
// of every input node in ws.ad (read off by the caller).
bool Evaluator::hess_direction(int j, const double* row_weights, Workspace& ws) const {
  const auto& nodes = kernel_.graph.nodes();
  double* v = ws.v.data();
  double* p1 = ws.p1.data();
  double* p2 = ws.p2.data();
  double* dv = ws.dv.data();
  double* a = ws.av.data();
  double* ad = ws.ad.data();

  // forward dual sweep
  for (size_t k = 0; k < nodes.size(); ++k) {
    const Node& nd = nodes[k];
    switch (nd.op) {
      case Op::cnst:
      case Op::index: dv[k] = 0.0; break;
      case Op::input: dv[k] = nd.a == j ? 1.0 : 0.0; break;
      default:
        dv[k] = p1[k] * dv[nd.a] + (nd.b >= 0 ? p2[k] * dv[nd.b] : 0.0);
        break;
    }
  }

  std::fill(ws.av.begin(), ws.av.end(), 0.0);
  std::fill(ws.ad.begin(), ws.ad.end(), 0.0);
  for (size_t r = 0; r < kernel_.roots.size(); ++r) a[kernel_.roots[r]] += row_weights[r];

  bool ok = true;
  for (size_t k = nodes.size(); k-- > 0;) {
    const double ak = a[k], adk = ad[k];
    if (ak == 0.0 && adk == 0.0) continue;
    const Node& nd = nodes[k];
    if (nd.a < 0 || nd.op == Op::input) continue;
    // directional derivatives of the local partials
    double p1d = 0.0, p2d = 0.0;
    switch (nd.op) {
      case Op::add:
      case Op::sub:
      case Op::neg: break;
      case Op::mul: p1d = dv[nd.b]; p2d = dv[nd.a]; break;
      case Op::div:
        p1d = -p1[k] * p1[k] * dv[nd.b];
        p2d = -(dv[k] * p1[k] + v[k] * p1d);
        break;
      case Op::sin:
      case Op::cos: p1d = -v[k] * dv[nd.a]; break;
      case Op::tan: p1d = 2.0 * v[k] * dv[k]; break;
      case Op::exp: p1d = dv[k]; break;
      case Op::log: p1d = -p1[k] * p1[k] * dv[nd.a]; break;
      case Op::sqrt: p1d = v[k] != 0.0 ? -p1[k] * dv[k] / v[k] : 0.0; break;
      case Op::pow: {
        double s = nd.c * (nd.c - 1.0) * std::pow(v[nd.a], nd.c - 2.0);
        p1d = s * dv[nd.a];
        ok &= std::isfinite(s) || ak == 0.0;
        break;
      }
      default: break;
    }
    a[nd.a] += ak * p1[k];
    ad[nd.a] += adk * p1[k] + ak * p1d;
    if (nd.b >= 0) {
      a[nd.b] += ak * p2[k];
      ad[nd.b] += adk * p2[k] + ak * p2d;
    }
  }
  return ok;
}

bool Evaluator::eval_hessian(std::span<const double> x, Index i, const double* row_weights, double* hess,
                             Workspace& ws) const {
  if (pattern_.hess.empty()) return true;
  if (!forward(x, i, ws, /*partials=*/true)) return false;

  bool ok = true;
  for (int j = 0; j < pattern_.n_inputs; ++j) {
    const int lo = pattern_.hess_dir_ptr[static_cast<size_t>(j)];
    const int hi = pattern_.hess_dir_ptr[static_cast<size_t>(j) + 1];
    if (lo == hi) continue;
    ok &= hess_direction(j, row_weights, ws);
    for (int e = lo; e < hi; ++e) {
      int node = input_node_[static_cast<size_t>(pattern_.hess[static_cast<size_t>(e)].first)];
      double h = node >= 0 ? ws.ad[static_cast<size_t>(node)] : 0.0;
      hess[e] = h;
      ok &= std::isfinite(h);
    }
  }
  return ok;
}

}  // namespace octrans::kernel

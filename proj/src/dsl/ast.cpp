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

#include "octrans/dsl/ast.hpp"

#include <cmath>

namespace octrans::dsl {

namespace {

ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

double apply_unary(UnaryOp op, double x) {
  switch (op) {
    case UnaryOp::neg: return -x;
    case UnaryOp::sin: return std::sin(x);
    case UnaryOp::cos: return std::cos(x);
    case UnaryOp::tan: return std::tan(x);
    case UnaryOp::exp: return std::exp(x);
    case UnaryOp::log: return std::log(x);
    case UnaryOp::sqrt: return std::sqrt(x);
  }
  return 0.0;
}

double apply_binary(BinaryOp op, double x, double y) {
  switch (op) {
    case BinaryOp::add: return x + y;
    case BinaryOp::sub: return x - y;
    case BinaryOp::mul: return x * y;
    case BinaryOp::div: return x / y;
    case BinaryOp::pow: return std::pow(x, y);
  }
  return 0.0;
}

}  // namespace

ExprPtr Expr::number(double v) {
  Expr e;
  e.kind = Kind::number;
  e.value = v;
  return make(std::move(e));
}

ExprPtr Expr::time() {
  Expr e;
  e.kind = Kind::time;
  return make(std::move(e));
}

ExprPtr Expr::comp_ref(int decl, int comp, TimeArg at) {
  Expr e;
  e.kind = Kind::comp_ref;
  e.decl = decl;
  e.comp = comp;
  e.at = at;
  return make(std::move(e));
}

ExprPtr Expr::unary(UnaryOp op, ExprPtr a) {
  if (a->is_number()) return number(apply_unary(op, a->value));
  if (op == UnaryOp::neg && a->kind == Kind::unary && a->uop == UnaryOp::neg) return a->a;
  Expr e;
  e.kind = Kind::unary;
  e.uop = op;
  e.a = std::move(a);
  return make(std::move(e));
}

ExprPtr Expr::binary(BinaryOp op, ExprPtr a, ExprPtr b) {
  if (a->is_number() && b->is_number()) return number(apply_binary(op, a->value, b->value));
  Expr e;
  e.kind = Kind::binary;
  e.bop = op;
  e.a = std::move(a);
  e.b = std::move(b);
  return make(std::move(e));
}

ExprPtr Expr::vector_lit(std::vector<ExprPtr> elems) {
  Expr e;
  e.kind = Kind::vector_lit;
  e.elems = std::move(elems);
  return make(std::move(e));
}

ExprPtr Expr::integral(ExprPtr a) {
  Expr e;
  e.kind = Kind::integral;
  e.a = std::move(a);
  return make(std::move(e));
}

bool equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::number: return a.value == b.value;
    case Expr::Kind::time: return true;
    case Expr::Kind::comp_ref: return a.decl == b.decl && a.comp == b.comp && a.at == b.at;
    case Expr::Kind::unary: return a.uop == b.uop && equal(a.a, b.a);
    case Expr::Kind::binary: return a.bop == b.bop && equal(a.a, b.a) && equal(a.b, b.b);
    case Expr::Kind::vector_lit: {
      if (a.elems.size() != b.elems.size()) return false;
      for (size_t i = 0; i < a.elems.size(); ++i)
        if (!equal(a.elems[i], b.elems[i])) return false;
      return true;
    }
    case Expr::Kind::integral: return equal(a.a, b.a);
  }
  return false;
}

bool equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return static_cast<bool>(a) == static_cast<bool>(b);
  return equal(*a, *b);
}

int OcpProblem::state_dim() const {
  int n = 0;
  for (const auto& d : decls)
    if (d.kind == VarKind::state) n += d.dim;
  return n;
}

int OcpProblem::control_dim() const {
  int n = 0;
  for (const auto& d : decls)
    if (d.kind == VarKind::control) n += d.dim;
  return n;
}

int OcpProblem::variable_dim() const {
  int n = 0;
  for (const auto& d : decls)
    if (d.kind == VarKind::variable) n += d.dim;
  return n;
}

std::string OcpProblem::comp_name(int decl_idx, int comp) const {
  const VarDecl& d = decl(decl_idx);
  if (comp < 0 || d.dim == 1) return d.name;
  if (!d.comp_names.empty()) return d.comp_names.at(static_cast<size_t>(comp));
  return d.name + std::to_string(comp + 1);
}

bool equal(const OcpProblem& a, const OcpProblem& b) {
  if (!(a.time == b.time)) return false;
  if (a.decls != b.decls) return false;
  if (a.decl_order.size() != b.decl_order.size()) return false;
  for (size_t i = 0; i < a.decl_order.size(); ++i) {
    if (a.decl_order[i].what != b.decl_order[i].what || a.decl_order[i].index != b.decl_order[i].index)
      return false;
  }
  if (a.dynamics.size() != b.dynamics.size()) return false;
  for (size_t i = 0; i < a.dynamics.size(); ++i) {
    const auto& x = a.dynamics[i];
    const auto& y = b.dynamics[i];
    if (x.decl != y.decl || x.comp != y.comp || !equal(x.rhs, y.rhs)) return false;
  }
  if (a.constraints.size() != b.constraints.size()) return false;
  for (size_t i = 0; i < a.constraints.size(); ++i) {
    const auto& x = a.constraints[i];
    const auto& y = b.constraints[i];
    if (x.kind != y.kind || !equal(x.expr, y.expr) || x.lower != y.lower || x.upper != y.upper) return false;
  }
  return equal(a.cost.mayer, b.cost.mayer) && equal(a.cost.lagrange, b.cost.lagrange) &&
         a.cost.from_max == b.cost.from_max;
}

}  // namespace octrans::dsl

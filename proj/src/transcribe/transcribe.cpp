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

#include "octrans/transcribe/transcribe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace octrans::transcribe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const char* kSchemeNames[] = {"euler", "trapezoid"};

using dsl::Expr;
using dsl::OcpProblem;
using dsl::TimeArg;
using dsl::VarKind;
using kernel::Graph;
using kernel::InputAddress;
using kernel::Kernel;

/// Lowers AST expressions into kernel graphs under a fixed layout.
class Lowerer {
 public:
  Lowerer(const OcpProblem& p, const VariableLayout& layout, Index N)
      : p_(p), layout_(layout), N_(N) {}

  // Nodes shared within one graph: h = (tf - t0)/N and t0.
  int h_node(Graph& g) const {
    int t0 = time_endpoint_node(g, p_.time.t0_const, p_.time.t0_var, "t0");
    int tf = time_endpoint_node(g, p_.time.tf_const, p_.time.tf_var, "tf");
    return g.div(g.sub(tf, t0), g.cnst(static_cast<double>(N_)));
  }

  /// Lower component `comp` of (vector) expression e; symbolic references
  /// resolve at node i + `offset`.
  int lower(Graph& g, const Expr& e, int comp, int offset) const {
    switch (e.kind) {
      case Expr::Kind::number: return g.cnst(e.value);
      case Expr::Kind::time: {
        int t0 = time_endpoint_node(g, p_.time.t0_const, p_.time.t0_var, "t0");
        return g.add(t0, g.mul(g.index(static_cast<double>(offset)), h_node(g)));
      }
      case Expr::Kind::comp_ref: return lower_ref(g, e, comp, offset);
      case Expr::Kind::unary: {
        int a = lower(g, *e.a, comp, offset);
        switch (e.uop) {
          case dsl::UnaryOp::neg: return g.neg(a);
          case dsl::UnaryOp::sin: return g.unary(kernel::Op::sin, a);
          case dsl::UnaryOp::cos: return g.unary(kernel::Op::cos, a);
          case dsl::UnaryOp::tan: return g.unary(kernel::Op::tan, a);
          case dsl::UnaryOp::exp: return g.unary(kernel::Op::exp, a);
          case dsl::UnaryOp::log: return g.unary(kernel::Op::log, a);
          case dsl::UnaryOp::sqrt: return g.unary(kernel::Op::sqrt, a);
        }
        return a;
      }
      case Expr::Kind::binary: {
        if (e.bop == dsl::BinaryOp::pow) {
          if (!e.b->is_number())
            throw std::runtime_error("non-constant exponents are not supported");
          return g.pow(lower(g, *e.a, comp, offset), e.b->value);
        }
        int a = lower(g, *e.a, comp, offset);
        int b = lower(g, *e.b, comp, offset);
        switch (e.bop) {
          case dsl::BinaryOp::add: return g.add(a, b);
          case dsl::BinaryOp::sub: return g.sub(a, b);
          case dsl::BinaryOp::mul: return g.mul(a, b);
          case dsl::BinaryOp::div: return g.div(a, b);
          default: return a;
        }
      }
      case Expr::Kind::vector_lit: return lower(g, *e.elems[static_cast<size_t>(comp)], 0, offset);
      case Expr::Kind::integral:
        throw std::runtime_error("integral(...) must be handled by the cost lowering");
    }
    return g.cnst(0.0);
  }

 private:
  int time_endpoint_node(Graph& g, double cval, int var, const char* what) const {
    if (var < 0) return g.cnst(cval);
    const auto& d = p_.decls[static_cast<size_t>(var)];
    return g.input({layout_.var_slot(var, 0), 0}, d.name.empty() ? what : d.name);
  }

  int lower_ref(Graph& g, const Expr& e, int comp, int offset) const {
    int c = e.comp >= 0 ? e.comp : comp;
    const auto& d = p_.decls[static_cast<size_t>(e.decl)];
    std::string label = p_.comp_name(e.decl, d.dim == 1 ? -1 : c);
    if (d.kind == VarKind::variable) return g.input({layout_.var_slot(e.decl, c), 0}, label);
    switch (e.at) {
      case TimeArg::initial:
        return g.input({layout_.slot(e.decl, c, 0), 0}, label + "@0");
      case TimeArg::final:
        return g.input({layout_.slot(e.decl, c, N_), 0}, label + "@N");
      case TimeArg::symbolic: {
        const Slab& s = layout_.slabs[static_cast<size_t>(e.decl)];
        InputAddress addr{s.base + static_cast<Index>(offset) * s.dim + c, s.dim};
        return g.input(addr, label + (offset == 0 ? "@i" : "@i+1"));
      }
    }
    return g.cnst(0.0);
  }

  const OcpProblem& p_;
  const VariableLayout& layout_;
  Index N_;
};

bool references_only_controls(const OcpProblem& p, const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::number: return true;
    case Expr::Kind::time: return false;
    case Expr::Kind::comp_ref:
      return p.decls[static_cast<size_t>(e.decl)].kind == VarKind::control;
    case Expr::Kind::unary:
    case Expr::Kind::integral: return references_only_controls(p, *e.a);
    case Expr::Kind::binary:
      return references_only_controls(p, *e.a) && references_only_controls(p, *e.b);
    case Expr::Kind::vector_lit:
      for (const auto& el : e.elems)
        if (!references_only_controls(p, *el)) return false;
      return true;
  }
  return false;
}

int expr_dim_of(const OcpProblem& p, const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::number:
    case Expr::Kind::time: return 1;
    case Expr::Kind::comp_ref: return e.comp >= 0 ? 1 : p.decls[static_cast<size_t>(e.decl)].dim;
    case Expr::Kind::unary:
    case Expr::Kind::integral: return expr_dim_of(p, *e.a);
    case Expr::Kind::binary: return std::max(expr_dim_of(p, *e.a), expr_dim_of(p, *e.b));
    case Expr::Kind::vector_lit: return static_cast<int>(e.elems.size());
  }
  return 1;
}

ConstraintGroup make_group(kernel::Kernel k, IndexRange range, std::vector<double> lower,
                           std::vector<double> upper, ConstraintGroup::Kind kind, std::string label) {
  kernel::Pattern pat = detect_pattern(k);
  ConstraintGroup grp{kernel::Evaluator(std::move(k), std::move(pat)), range, 0, std::move(lower),
                      std::move(upper), kind, 0, std::move(label)};
  grp.out_dim = grp.eval.out_dim();
  return grp;
}

}  // namespace

const char* scheme_name(Scheme s) { return kSchemeNames[static_cast<int>(s)]; }

StructuredNlp transcribe(const dsl::OcpProblem& p, Scheme scheme, Index N, const InitPolicy& init) {
  TranscribeOptions opts;
  opts.init = init;
  return transcribe(p, scheme, N, opts);
}

StructuredNlp transcribe(const dsl::OcpProblem& p, Scheme scheme, Index N, const TranscribeOptions& topts) {
  const InitPolicy& init = topts.init;
  if (N < 1) throw std::invalid_argument("grid size N must be >= 1");

  StructuredNlp nlp;
  nlp.scheme = scheme;
  nlp.N = N;
  nlp.maximize = p.cost.from_max;

  // variable layout: states and controls on all N+1 nodes, free variables flat
  VariableLayout& L = nlp.layout;
  L.N = N;
  Index base = 0;
  for (size_t d = 0; d < p.decls.size(); ++d) {
    const auto& decl = p.decls[d];
    Slab s;
    s.kind = decl.kind;
    s.decl = static_cast<int>(d);
    s.dim = decl.dim;
    s.base = base;
    s.nodes = decl.kind == VarKind::variable ? 1 : N + 1;
    base += s.dim * s.nodes;
    L.slabs.push_back(s);
  }
  L.nvar = base;

  nlp.lvar.assign(static_cast<size_t>(L.nvar), -kInf);
  nlp.uvar.assign(static_cast<size_t>(L.nvar), kInf);

  Lowerer low(p, L, N);

  // dynamics residual groups, one per state component
  for (const auto& dyn : p.dynamics) {
    Kernel k;
    Graph& g = k.graph;
    const Slab& s = L.slabs[static_cast<size_t>(dyn.decl)];
    std::string nm = p.comp_name(dyn.decl, p.decls[static_cast<size_t>(dyn.decl)].dim == 1 ? -1 : dyn.comp);
    int x_cur = g.input({s.base + dyn.comp, s.dim}, nm + "@i");
    int x_next = g.input({s.base + s.dim + dyn.comp, s.dim}, nm + "@i+1");
    int h = low.h_node(g);
    int root;
    if (scheme == Scheme::euler) {
      int f0 = low.lower(g, *dyn.rhs, 0, 0);
      root = g.sub(g.sub(x_next, x_cur), g.mul(h, f0));
    } else {
      int f0 = low.lower(g, *dyn.rhs, 0, 0);
      int f1 = low.lower(g, *dyn.rhs, 0, 1);
      root = g.sub(g.sub(x_next, x_cur), g.div(g.mul(h, g.add(f0, f1)), g.cnst(2.0)));
    }
    k.roots.push_back(root);
    nlp.con_groups.push_back(make_group(std::move(k), IndexRange{0, N, false}, {0.0}, {0.0},
                                        ConstraintGroup::Kind::dynamics, "dynamics " + nm));
  }

  // declared constraints: boundary and path rows, free-variable boxes
  for (const auto& c : p.constraints) {
    const int dim = expr_dim_of(p, *c.expr);
    if (c.kind == dsl::ConstraintDecl::Kind::box_variable) {
      Index slot = L.var_slot(c.expr->decl, std::max(c.expr->comp, 0));
      nlp.lvar[static_cast<size_t>(slot)] = std::max(nlp.lvar[static_cast<size_t>(slot)], c.lower[0]);
      nlp.uvar[static_cast<size_t>(slot)] = std::min(nlp.uvar[static_cast<size_t>(slot)], c.upper[0]);
      if (nlp.lvar[static_cast<size_t>(slot)] > nlp.uvar[static_cast<size_t>(slot)])
        throw std::runtime_error("contradictory bounds on variable at line " + std::to_string(c.line));
      continue;
    }
    if (topts.boxes_as_bounds && c.kind == dsl::ConstraintDecl::Kind::path &&
        c.expr->kind == Expr::Kind::comp_ref &&
        (c.expr->comp >= 0 || p.decls[static_cast<size_t>(c.expr->decl)].dim == 1)) {
      const Slab& s = L.slabs[static_cast<size_t>(c.expr->decl)];
      const int comp = std::max(c.expr->comp, 0);
      for (Index node = 0; node <= N; ++node) {
        const auto slot = static_cast<size_t>(s.base + node * s.dim + comp);
        nlp.lvar[slot] = std::max(nlp.lvar[slot], c.lower[0]);
        nlp.uvar[slot] = std::min(nlp.uvar[slot], c.upper[0]);
      }
      continue;
    }
    Kernel k;
    for (int comp = 0; comp < dim; ++comp) k.roots.push_back(low.lower(k.graph, *c.expr, comp, 0));
    if (c.kind == dsl::ConstraintDecl::Kind::boundary) {
      nlp.con_groups.push_back(make_group(std::move(k), IndexRange{0, 1, false}, c.lower, c.upper,
                                          ConstraintGroup::Kind::boundary,
                                          "boundary line " + std::to_string(c.line)));
    } else {
      Index hi = N + 1;
      if (scheme == Scheme::euler && references_only_controls(p, *c.expr)) hi = N;
      nlp.con_groups.push_back(make_group(std::move(k), IndexRange{0, hi, false}, c.lower, c.upper,
                                          ConstraintGroup::Kind::path,
                                          "path line " + std::to_string(c.line)));
    }
  }

  // start-value clip boxes: slot bounds plus single-slot path bounds
  nlp.clip_lo = nlp.lvar;
  nlp.clip_hi = nlp.uvar;
  for (const auto& c : p.constraints) {
    if (c.kind != dsl::ConstraintDecl::Kind::path || c.expr->kind != Expr::Kind::comp_ref) continue;
    if (c.expr->comp < 0 && p.decls[static_cast<size_t>(c.expr->decl)].dim != 1) continue;
    const Slab& s = L.slabs[static_cast<size_t>(c.expr->decl)];
    const int comp = std::max(c.expr->comp, 0);
    for (Index node = 0; node <= N; ++node) {
      const auto slot = static_cast<size_t>(s.base + node * s.dim + comp);
      nlp.clip_lo[slot] = std::max(nlp.clip_lo[slot], c.lower[0]);
      nlp.clip_hi[slot] = std::min(nlp.clip_hi[slot], c.upper[0]);
    }
  }

  // constraint row numbering and flattened bounds
  nlp.m_con = 0;
  for (auto& grp : nlp.con_groups) {
    grp.row_base = nlp.m_con;
    nlp.m_con += grp.rows();
  }
  nlp.lcon.resize(static_cast<size_t>(nlp.m_con));
  nlp.ucon.resize(static_cast<size_t>(nlp.m_con));
  for (const auto& grp : nlp.con_groups) {
    for (Index kdx = 0; kdx < grp.range.count(); ++kdx)
      for (int r = 0; r < grp.out_dim; ++r) {
        nlp.lcon[static_cast<size_t>(grp.row_base + kdx * grp.out_dim + r)] = grp.lower[static_cast<size_t>(r)];
        nlp.ucon[static_cast<size_t>(grp.row_base + kdx * grp.out_dim + r)] = grp.upper[static_cast<size_t>(r)];
      }
  }

  // objective: Lagrange quadrature matched to the scheme, plus Mayer term
  if (p.cost.lagrange) {
    if (scheme == Scheme::euler) {
      Kernel k;
      int h = low.h_node(k.graph);
      k.roots.push_back(k.graph.mul(h, low.lower(k.graph, *p.cost.lagrange, 0, 0)));
      kernel::Pattern pat = detect_pattern(k);
      nlp.obj_groups.push_back(
          ObjectiveGroup{kernel::Evaluator(std::move(k), std::move(pat)), IndexRange{0, N, false}, 1.0,
                         "lagrange (left rectangle)"});
    } else {
      for (int part = 0; part < 2; ++part) {
        Kernel k;
        int h = low.h_node(k.graph);
        k.roots.push_back(k.graph.mul(h, low.lower(k.graph, *p.cost.lagrange, 0, 0)));
        kernel::Pattern pat = detect_pattern(k);
        if (part == 0) {
          nlp.obj_groups.push_back(
              ObjectiveGroup{kernel::Evaluator(std::move(k), std::move(pat)), IndexRange{0, N, true}, 0.5,
                             "lagrange (trapezoid endpoints)"});
        } else if (N >= 2) {
          nlp.obj_groups.push_back(
              ObjectiveGroup{kernel::Evaluator(std::move(k), std::move(pat)), IndexRange{1, N, false}, 1.0,
                             "lagrange (trapezoid interior)"});
        }
      }
    }
  }
  if (p.cost.mayer) {
    Kernel k;
    k.roots.push_back(low.lower(k.graph, *p.cost.mayer, 0, 0));
    kernel::Pattern pat = detect_pattern(k);
    nlp.obj_groups.push_back(ObjectiveGroup{kernel::Evaluator(std::move(k), std::move(pat)),
                                            IndexRange{0, 1, false}, 1.0, "mayer"});
  }

  initial_point(nlp, p, init);

  // euler never references U_N: pin it to the start value so no structurally
  // empty column reaches the KKT system
  if (scheme == Scheme::euler) {
    for (const auto& s : L.slabs) {
      if (s.kind != VarKind::control) continue;
      for (int c = 0; c < s.dim; ++c) {
        Index slot = s.base + N * s.dim + c;
        nlp.lvar[static_cast<size_t>(slot)] = nlp.x_start[static_cast<size_t>(slot)];
        nlp.uvar[static_cast<size_t>(slot)] = nlp.x_start[static_cast<size_t>(slot)];
        nlp.clip_lo[static_cast<size_t>(slot)] = nlp.lvar[static_cast<size_t>(slot)];
        nlp.clip_hi[static_cast<size_t>(slot)] = nlp.uvar[static_cast<size_t>(slot)];
      }
    }
  }

  // every slot must be referenced by a group stencil or carry a finite bound
  {
    std::vector<char> used(static_cast<size_t>(L.nvar), 0);
    auto mark = [&](const kernel::Evaluator& ev, const IndexRange& range) {
      for (const auto& addr : ev.kernel().graph.inputs()) {
        if (addr.stride == 0) {
          used[static_cast<size_t>(addr.base)] = 1;
        } else {
          for (Index kdx = 0; kdx < range.count(); ++kdx)
            used[static_cast<size_t>(addr.slot(range.at(kdx)))] = 1;
        }
      }
    };
    for (const auto& grp : nlp.con_groups) mark(grp.eval, grp.range);
    for (const auto& grp : nlp.obj_groups) mark(grp.eval, grp.range);
    for (Index s = 0; s < L.nvar; ++s)
      if (std::isfinite(nlp.lvar[static_cast<size_t>(s)]) || std::isfinite(nlp.uvar[static_cast<size_t>(s)]))
        used[static_cast<size_t>(s)] = 1;
    for (Index s = 0; s < L.nvar; ++s)
      if (!used[static_cast<size_t>(s)])
        throw std::runtime_error("decision slot " + std::to_string(s) +
                                 " is referenced by no constraint, objective, or bound");
  }

  return nlp;
}

void initial_point(StructuredNlp& nlp, const dsl::OcpProblem& p, const InitPolicy& init) {
  nlp.x_start.assign(static_cast<size_t>(nlp.layout.nvar), 0.0);
  for (const auto& s : nlp.layout.slabs) {
    const auto& decl = p.decls[static_cast<size_t>(s.decl)];
    const std::vector<double>* slab_values = nullptr;
    if (auto it = init.per_decl.find(decl.name); it != init.per_decl.end()) {
      if (static_cast<int>(it->second.size()) != s.dim)
        throw std::invalid_argument("start values for '" + decl.name + "' must have " +
                                    std::to_string(s.dim) + " entries");
      slab_values = &it->second;
    }
    double fallback = decl.kind == VarKind::state ? init.state
                      : decl.kind == VarKind::control ? init.control
                                                      : init.variable;
    for (Index node = 0; node < s.nodes; ++node)
      for (int c = 0; c < s.dim; ++c) {
        double v = slab_values ? (*slab_values)[static_cast<size_t>(c)] : fallback;
        nlp.x_start[static_cast<size_t>(s.base + node * s.dim + c)] = v;
      }
  }
  const std::vector<double>& lo = nlp.clip_lo.empty() ? nlp.lvar : nlp.clip_lo;
  const std::vector<double>& hi = nlp.clip_hi.empty() ? nlp.uvar : nlp.clip_hi;
  for (Index i = 0; i < nlp.layout.nvar; ++i) {
    auto idx = static_cast<size_t>(i);
    nlp.x_start[idx] = std::clamp(nlp.x_start[idx], lo[idx], hi[idx]);
  }
}

}  // namespace octrans::transcribe

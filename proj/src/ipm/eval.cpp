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

#include <chrono>
#include <cmath>

#include "ipm_internal.hpp"

namespace octrans::ipm::detail {

namespace {

class Stopwatch {
 public:
  explicit Stopwatch(double& acc) : acc_(acc), start_(std::chrono::steady_clock::now()) {}
  ~Stopwatch() {
    acc_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  double& acc_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

EvalContext::EvalContext(const StructuredNlp& nlp, const backend::Backend& backend)
    : nlp_(nlp), backend_(backend) {
  const int slots = backend.scratch_slots();

  Index jac_total = 0, hess_total = 0;
  for (const auto& g : nlp.con_groups) {
    ConGroupCtx ctx;
    ctx.grp = &g;
    ctx.jac_nnz = static_cast<int>(g.eval.pattern().jac.size());
    ctx.hess_nnz = static_cast<int>(g.eval.pattern().hess.size());
    ctx.jac_off = jac_total;
    ctx.hess_off = hess_total;
    jac_total += static_cast<Index>(ctx.jac_nnz) * g.range.count();
    hess_total += static_cast<Index>(ctx.hess_nnz) * g.range.count();
    ctx.ws.reserve(static_cast<size_t>(slots));
    for (int w = 0; w < slots; ++w) ctx.ws.push_back(g.eval.make_workspace());
    weight_stride_ = std::max(weight_stride_, g.out_dim);
    con_.push_back(std::move(ctx));
  }
  Index grad_total = 0;
  for (const auto& g : nlp.obj_groups) {
    ObjGroupCtx ctx;
    ctx.grp = &g;
    ctx.grad_nnz = static_cast<int>(g.eval.pattern().jac.size());
    ctx.hess_nnz = static_cast<int>(g.eval.pattern().hess.size());
    ctx.grad_off = grad_total;
    ctx.hess_off = hess_total;
    grad_total += static_cast<Index>(ctx.grad_nnz) * g.range.count();
    hess_total += static_cast<Index>(ctx.hess_nnz) * g.range.count();
    ctx.ws.reserve(static_cast<size_t>(slots));
    for (int w = 0; w < slots; ++w) ctx.ws.push_back(g.eval.make_workspace());
    obj_.push_back(std::move(ctx));
  }

  jac_row.resize(static_cast<size_t>(jac_total));
  jac_col.resize(static_cast<size_t>(jac_total));
  jac_val.assign(static_cast<size_t>(jac_total), 0.0);
  hess_row.resize(static_cast<size_t>(hess_total));
  hess_col.resize(static_cast<size_t>(hess_total));
  hess_val.assign(static_cast<size_t>(hess_total), 0.0);
  grad_col.resize(static_cast<size_t>(grad_total));
  grad_val.assign(static_cast<size_t>(grad_total), 0.0);

  // materialize global coordinates (index-invariant stencils offset per index)
  for (const auto& ctx : con_) {
    const auto& pat = ctx.grp->eval.pattern();
    const auto& inputs = ctx.grp->eval.kernel().graph.inputs();
    for (Index k = 0; k < ctx.grp->range.count(); ++k) {
      const Index idx = ctx.grp->range.at(k);
      const Index base = ctx.jac_off + k * ctx.jac_nnz;
      for (size_t e = 0; e < pat.jac.size(); ++e) {
        jac_row[static_cast<size_t>(base) + e] = ctx.grp->row_base + k * ctx.grp->out_dim + pat.jac[e].first;
        jac_col[static_cast<size_t>(base) + e] = inputs[static_cast<size_t>(pat.jac[e].second)].slot(idx);
      }
      const Index hbase = ctx.hess_off + k * ctx.hess_nnz;
      for (size_t e = 0; e < pat.hess.size(); ++e) {
        Index a = inputs[static_cast<size_t>(pat.hess[e].first)].slot(idx);
        Index b = inputs[static_cast<size_t>(pat.hess[e].second)].slot(idx);
        hess_row[static_cast<size_t>(hbase) + e] = std::max(a, b);
        hess_col[static_cast<size_t>(hbase) + e] = std::min(a, b);
      }
    }
  }
  for (const auto& ctx : obj_) {
    const auto& pat = ctx.grp->eval.pattern();
    const auto& inputs = ctx.grp->eval.kernel().graph.inputs();
    for (Index k = 0; k < ctx.grp->range.count(); ++k) {
      const Index idx = ctx.grp->range.at(k);
      const Index base = ctx.grad_off + k * ctx.grad_nnz;
      for (size_t e = 0; e < pat.jac.size(); ++e)
        grad_col[static_cast<size_t>(base) + e] = inputs[static_cast<size_t>(pat.jac[e].second)].slot(idx);
      const Index hbase = ctx.hess_off + k * ctx.hess_nnz;
      for (size_t e = 0; e < pat.hess.size(); ++e) {
        Index a = inputs[static_cast<size_t>(pat.hess[e].first)].slot(idx);
        Index b = inputs[static_cast<size_t>(pat.hess[e].second)].slot(idx);
        hess_row[static_cast<size_t>(hbase) + e] = std::max(a, b);
        hess_col[static_cast<size_t>(hbase) + e] = std::min(a, b);
      }
    }
  }

  c_raw_.assign(static_cast<size_t>(nlp.m_con), 0.0);
  row_scale.assign(static_cast<size_t>(nlp.m_con), 1.0);
  hess_weight_scratch_.assign(static_cast<size_t>(slots) * static_cast<size_t>(std::max(weight_stride_, 1)),
                              0.0);
}

bool EvalContext::eval_constraints(std::span<const double> x, std::vector<double>& c_scaled) {
  Stopwatch sw(time_derivatives);
  bool ok = true;
  for (const auto& ctx : con_) {
    ok &= backend_.par_for(ctx.grp->range.count(), [&](Index lo, Index hi, int ws_id) {
      auto& ws = ctx.ws[static_cast<size_t>(ws_id)];
      bool chunk_ok = true;
      for (Index k = lo; k < hi; ++k) {
        double* out = &c_raw_[static_cast<size_t>(ctx.grp->row_base + k * ctx.grp->out_dim)];
        chunk_ok &= ctx.grp->eval.eval_values(x, ctx.grp->range.at(k), out, ws);
      }
      return chunk_ok;
    });
  }
  if (!ok) return false;
  c_scaled.resize(static_cast<size_t>(nlp_.m_con));
  for (Index r = 0; r < nlp_.m_con; ++r)
    c_scaled[static_cast<size_t>(r)] = row_scale[static_cast<size_t>(r)] * c_raw_[static_cast<size_t>(r)];
  return true;
}

bool EvalContext::eval_constraints_jacobian(std::span<const double> x, std::vector<double>& c_scaled) {
  Stopwatch sw(time_derivatives);
  bool ok = true;
  for (const auto& ctx : con_) {
    ok &= backend_.par_for(ctx.grp->range.count(), [&](Index lo, Index hi, int ws_id) {
      auto& ws = ctx.ws[static_cast<size_t>(ws_id)];
      bool chunk_ok = true;
      for (Index k = lo; k < hi; ++k) {
        double* out = &c_raw_[static_cast<size_t>(ctx.grp->row_base + k * ctx.grp->out_dim)];
        double* jac = &jac_val[static_cast<size_t>(ctx.jac_off + k * ctx.jac_nnz)];
        chunk_ok &= ctx.grp->eval.eval_values_jacobian(x, ctx.grp->range.at(k), out, jac, ws);
        // row scaling: entry rows are row_base + k*out_dim + pattern row
        const auto& pat = ctx.grp->eval.pattern();
        for (int e = 0; e < ctx.jac_nnz; ++e)
          jac[e] *= row_scale[static_cast<size_t>(ctx.grp->row_base + k * ctx.grp->out_dim +
                                                  pat.jac[static_cast<size_t>(e)].first)];
      }
      return chunk_ok;
    });
  }
  if (!ok) return false;
  c_scaled.resize(static_cast<size_t>(nlp_.m_con));
  for (Index r = 0; r < nlp_.m_con; ++r)
    c_scaled[static_cast<size_t>(r)] = row_scale[static_cast<size_t>(r)] * c_raw_[static_cast<size_t>(r)];
  return true;
}

bool EvalContext::eval_objective(std::span<const double> x, double& f_scaled) {
  Stopwatch sw(time_derivatives);
  double total = 0.0;
  for (const auto& ctx : obj_) {
    double part = 0.0;
    bool ok = backend_.par_reduce(
        ctx.grp->range.count(),
        [&](Index lo, Index hi, int ws_id, double& partial) {
          auto& ws = ctx.ws[static_cast<size_t>(ws_id)];
          double s = 0.0;
          bool chunk_ok = true;
          for (Index k = lo; k < hi; ++k) {
            double v;
            chunk_ok &= ctx.grp->eval.eval_values(x, ctx.grp->range.at(k), &v, ws);
            s += v;
          }
          partial = s;
          return chunk_ok;
        },
        part);
    if (!ok) return false;
    total += ctx.grp->weight * part;
  }
  f_scaled = obj_scale * total;
  return std::isfinite(f_scaled);
}

bool EvalContext::eval_gradient(std::span<const double> x, std::vector<double>& grad_dense) {
  Stopwatch sw(time_derivatives);
  bool ok = true;
  for (const auto& ctx : obj_) {
    const double w = obj_scale * ctx.grp->weight;
    ok &= backend_.par_for(ctx.grp->range.count(), [&](Index lo, Index hi, int ws_id) {
      auto& ws = ctx.ws[static_cast<size_t>(ws_id)];
      bool chunk_ok = true;
      for (Index k = lo; k < hi; ++k) {
        double* out = &grad_val[static_cast<size_t>(ctx.grad_off + k * ctx.grad_nnz)];
        chunk_ok &= ctx.grp->eval.eval_jacobian(x, ctx.grp->range.at(k), out, ws);
        for (int e = 0; e < ctx.grad_nnz; ++e) out[e] *= w;
      }
      return chunk_ok;
    });
  }
  if (!ok) return false;
  grad_dense.assign(static_cast<size_t>(nlp_.nvar()), 0.0);
  for (size_t e = 0; e < grad_col.size(); ++e)
    grad_dense[static_cast<size_t>(grad_col[e])] += grad_val[e];
  return true;
}

bool EvalContext::eval_hessian(std::span<const double> x, std::span<const double> lambda_scaled) {
  Stopwatch sw(time_derivatives);
  bool ok = true;
  for (const auto& ctx : con_) {
    if (ctx.hess_nnz == 0) continue;
    ok &= backend_.par_for(ctx.grp->range.count(), [&](Index lo, Index hi, int ws_id) {
      auto& ws = ctx.ws[static_cast<size_t>(ws_id)];
      double* weights = &hess_weight_scratch_[static_cast<size_t>(ws_id) * static_cast<size_t>(weight_stride_)];
      bool chunk_ok = true;
      for (Index k = lo; k < hi; ++k) {
        const Index row0 = ctx.grp->row_base + k * ctx.grp->out_dim;
        for (int r = 0; r < ctx.grp->out_dim; ++r)
          weights[r] = lambda_scaled[static_cast<size_t>(row0 + r)] * row_scale[static_cast<size_t>(row0 + r)];
        double* out = &hess_val[static_cast<size_t>(ctx.hess_off + k * ctx.hess_nnz)];
        chunk_ok &= ctx.grp->eval.eval_hessian(x, ctx.grp->range.at(k), weights, out, ws);
      }
      return chunk_ok;
    });
  }
  for (const auto& ctx : obj_) {
    if (ctx.hess_nnz == 0) continue;
    const double w = obj_scale * ctx.grp->weight;
    ok &= backend_.par_for(ctx.grp->range.count(), [&](Index lo, Index hi, int ws_id) {
      auto& ws = ctx.ws[static_cast<size_t>(ws_id)];
      bool chunk_ok = true;
      for (Index k = lo; k < hi; ++k) {
        double* out = &hess_val[static_cast<size_t>(ctx.hess_off + k * ctx.hess_nnz)];
        chunk_ok &= ctx.grp->eval.eval_hessian(x, ctx.grp->range.at(k), &w, out, ws);
      }
      return chunk_ok;
    });
  }
  return ok;
}

double EvalContext::max_abs_hessian() const {
  double m = 0.0;
  for (double v : hess_val) m = std::max(m, std::abs(v));
  return m;
}

void EvalContext::compute_scaling(std::span<const double> x0, bool enabled) {
  obj_scale = 1.0;
  std::fill(row_scale.begin(), row_scale.end(), 1.0);
  if (!enabled) return;

  std::vector<double> grad;
  std::vector<double> c_scaled;
  if (!eval_gradient(x0, grad) || !eval_constraints_jacobian(x0, c_scaled)) return;  // keep unit scales

  double gmax = 0.0;
  for (double v : grad) gmax = std::max(gmax, std::abs(v));
  if (gmax > 0.0) obj_scale = std::min(1.0, 100.0 / gmax);

  std::vector<double> jmax(static_cast<size_t>(nlp_.m_con), 0.0);
  for (size_t e = 0; e < jac_val.size(); ++e)
    jmax[static_cast<size_t>(jac_row[e])] = std::max(jmax[static_cast<size_t>(jac_row[e])], std::abs(jac_val[e]));
  for (Index r = 0; r < nlp_.m_con; ++r) {
    double m = jmax[static_cast<size_t>(r)];
    row_scale[static_cast<size_t>(r)] = m > 0.0 ? std::min(1.0, 100.0 / m) : 1.0;
  }
}

// ---------------------------------------------------------------------------

Reduction::Reduction(const StructuredNlp& nlp) {
  xlo = nlp.lvar;
  xhi = nlp.uvar;
  row_slot.assign(static_cast<size_t>(nlp.m_con), -1);
  for (const auto& grp : nlp.con_groups) {
    const auto& g = grp.eval.kernel().graph;
    for (int r = 0; r < grp.out_dim; ++r) {
      const auto& root = g.node(grp.eval.kernel().roots[static_cast<size_t>(r)]);
      if (root.op != kernel::Op::input) continue;  // fold only c(x) = x_slot rows
      const kernel::InputAddress addr = g.inputs()[static_cast<size_t>(root.a)];
      for (Index k = 0; k < grp.range.count(); ++k) {
        const Index row = grp.row_base + k * grp.out_dim + r;
        const auto slot = static_cast<size_t>(addr.slot(grp.range.at(k)));
        row_slot[static_cast<size_t>(row)] = static_cast<Index>(slot);
        xlo[slot] = std::max(xlo[slot], nlp.lcon[static_cast<size_t>(row)]);
        xhi[slot] = std::min(xhi[slot], nlp.ucon[static_cast<size_t>(row)]);
        if (xlo[slot] > xhi[slot]) contradictory = true;
      }
    }
  }
  dual_index.assign(static_cast<size_t>(nlp.m_con), -1);
  for (Index r = 0; r < nlp.m_con; ++r) {
    if (row_slot[static_cast<size_t>(r)] >= 0) continue;
    dual_index[static_cast<size_t>(r)] = m_active++;
    dual_row.push_back(r);
  }
}

KktAssembler::KktAssembler(const StructuredNlp& nlp, const EvalContext& ec, const Reduction& red)
    : red_(red) {
  const Index nvar = nlp.nvar();
  m = red.m_active;
  prim_index.assign(static_cast<size_t>(nvar), -1);
  for (Index s = 0; s < nvar; ++s) {
    if (red.xlo[static_cast<size_t>(s)] == red.xhi[static_cast<size_t>(s)]) continue;  // fixed
    prim_index[static_cast<size_t>(s)] = n_free;
    free_slot.push_back(s);
    ++n_free;
  }
  slack_index.assign(static_cast<size_t>(nlp.m_con), -1);
  for (Index r = 0; r < nlp.m_con; ++r) {
    if (red.dual_index[static_cast<size_t>(r)] < 0) continue;
    if (nlp.lcon[static_cast<size_t>(r)] == nlp.ucon[static_cast<size_t>(r)]) continue;  // equality
    slack_index[static_cast<size_t>(r)] = n_slack;
    slack_of.push_back(r);
    ++n_slack;
  }
  ntot = n_free + n_slack;
  dim = ntot + m;

  // gather every structural entry once; sources remember their position
  std::vector<std::pair<Index, Index>> keys;  // (col, row), row >= col
  auto push = [&keys](Index row, Index col) {
    keys.emplace_back(col, row);
    return static_cast<Index>(keys.size()) - 1;
  };

  hess_pos_.assign(ec.hess_row.size(), -1);
  for (size_t e = 0; e < ec.hess_row.size(); ++e) {
    Index pi = prim_index[static_cast<size_t>(ec.hess_row[e])];
    Index pj = prim_index[static_cast<size_t>(ec.hess_col[e])];
    if (pi < 0 || pj < 0) continue;
    hess_pos_[e] = push(std::max(pi, pj), std::min(pi, pj));
  }
  jac_pos_.assign(ec.jac_row.size(), -1);
  for (size_t e = 0; e < ec.jac_row.size(); ++e) {
    const Index dual = red.dual_index[static_cast<size_t>(ec.jac_row[e])];
    if (dual < 0) continue;
    Index pj = prim_index[static_cast<size_t>(ec.jac_col[e])];
    if (pj < 0) continue;
    jac_pos_[e] = push(ntot + dual, pj);
  }
  slack_pos_.assign(static_cast<size_t>(n_slack), -1);
  for (Index k = 0; k < n_slack; ++k) {
    const Index dual = red.dual_index[static_cast<size_t>(slack_of[static_cast<size_t>(k)])];
    slack_pos_[static_cast<size_t>(k)] = push(ntot + dual, n_free + k);
  }
  prim_diag_pos_.assign(static_cast<size_t>(ntot), -1);
  for (Index i = 0; i < ntot; ++i) prim_diag_pos_[static_cast<size_t>(i)] = push(i, i);
  dual_diag_pos_.assign(static_cast<size_t>(m), -1);
  for (Index r = 0; r < m; ++r) dual_diag_pos_[static_cast<size_t>(r)] = push(ntot + r, ntot + r);

  // dedupe into CSC
  std::vector<Index> order(keys.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);
  std::sort(order.begin(), order.end(), [&keys](Index a, Index b) {
    return keys[static_cast<size_t>(a)] < keys[static_cast<size_t>(b)];
  });
  std::vector<Index> keypos(keys.size());
  K.n = dim;
  K.colp.assign(static_cast<size_t>(dim) + 1, 0);
  K.rowi.clear();
  Index unique_count = 0;
  for (size_t i = 0; i < order.size(); ++i) {
    const auto& key = keys[static_cast<size_t>(order[i])];
    if (i == 0 || keys[static_cast<size_t>(order[i - 1])] != key) {
      K.rowi.push_back(key.second);
      K.colp[static_cast<size_t>(key.first) + 1]++;
      ++unique_count;
    }
    keypos[static_cast<size_t>(order[i])] = unique_count - 1;
  }
  for (Index j = 0; j < dim; ++j) K.colp[static_cast<size_t>(j) + 1] += K.colp[static_cast<size_t>(j)];
  K.val.assign(static_cast<size_t>(unique_count), 0.0);

  auto remap = [&keypos](std::vector<Index>& v) {
    for (auto& p : v)
      if (p >= 0) p = keypos[static_cast<size_t>(p)];
  };
  remap(hess_pos_);
  remap(jac_pos_);
  remap(slack_pos_);
  remap(prim_diag_pos_);
  remap(dual_diag_pos_);

  // kept equality rows with exactly one structural Jacobian column
  {
    std::vector<Index> row_cols(static_cast<size_t>(nlp.m_con), -1);
    std::vector<int> row_count(static_cast<size_t>(nlp.m_con), 0);
    for (size_t e = 0; e < ec.jac_row.size(); ++e) {
      const Index pj = prim_index[static_cast<size_t>(ec.jac_col[e])];
      if (pj < 0) continue;
      const auto r = static_cast<size_t>(ec.jac_row[e]);
      if (row_count[r] == 0 || row_cols[r] == pj) {
        row_cols[r] = pj;
        row_count[r] = 1;
      } else {
        row_count[r] = 2;
      }
    }
    for (Index r = 0; r < nlp.m_con; ++r) {
      const Index dual = red.dual_index[static_cast<size_t>(r)];
      if (dual < 0 || slack_index[static_cast<size_t>(r)] >= 0) continue;
      if (row_count[static_cast<size_t>(r)] == 1)
        pivot_after_.emplace_back(row_cols[static_cast<size_t>(r)], ntot + dual);
    }
  }
}

void KktAssembler::assemble(const EvalContext& ec, std::span<const double> sigma) {
  std::fill(K.val.begin(), K.val.end(), 0.0);
  for (size_t e = 0; e < hess_pos_.size(); ++e)
    if (hess_pos_[e] >= 0) K.val[static_cast<size_t>(hess_pos_[e])] += ec.hess_val[e];
  for (size_t e = 0; e < jac_pos_.size(); ++e)
    if (jac_pos_[e] >= 0) K.val[static_cast<size_t>(jac_pos_[e])] += ec.jac_val[e];
  for (Index k = 0; k < n_slack; ++k)
    K.val[static_cast<size_t>(slack_pos_[static_cast<size_t>(k)])] += -1.0;
  for (Index i = 0; i < ntot; ++i)
    K.val[static_cast<size_t>(prim_diag_pos_[static_cast<size_t>(i)])] += sigma[static_cast<size_t>(i)];
  // dual diagonal stays zero; factorize() applies -delta_c there
}

const sparse::SymbolicLdl& KktAssembler::symbolic() {
  if (!analyzed_) {
    std::vector<Index> perm = sparse::amd_order(K);
    if (!pivot_after_.empty()) {
      // defer single-entry duals until right after their primal column
      std::vector<Index> chain_head(static_cast<size_t>(dim), -1);
      std::vector<Index> chain_next(static_cast<size_t>(dim), -1);
      std::vector<char> deferred(static_cast<size_t>(dim), 0);
      for (const auto& [col, dual] : pivot_after_) {
        chain_next[static_cast<size_t>(dual)] = chain_head[static_cast<size_t>(col)];
        chain_head[static_cast<size_t>(col)] = dual;
        deferred[static_cast<size_t>(dual)] = 1;
      }
      std::vector<Index> adjusted;
      adjusted.reserve(static_cast<size_t>(dim));
      for (Index k = 0; k < dim; ++k) {
        const Index node = perm[static_cast<size_t>(k)];
        if (deferred[static_cast<size_t>(node)]) continue;
        adjusted.push_back(node);
        for (Index t = chain_head[static_cast<size_t>(node)]; t >= 0; t = chain_next[static_cast<size_t>(t)])
          adjusted.push_back(t);
      }
      perm = std::move(adjusted);
    }
    sym_ = sparse::analyze_ordered(K, perm);
    analyzed_ = true;
    ++analyze_count;
  }
  return sym_;
}

}  // namespace octrans::ipm::detail

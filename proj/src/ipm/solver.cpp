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

#include "octrans/ipm/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <limits>

#include "ipm_internal.hpp"

namespace octrans::ipm {

namespace {

using detail::EvalContext;
using detail::KktAssembler;
using detail::Reduction;

constexpr double kInf = std::numeric_limits<double>::infinity();

// filter line-search constants (standard values)
constexpr double kGammaTheta = 1e-5;
constexpr double kGammaPhi = 1e-5;
constexpr double kSTheta = 1.1;
constexpr double kSPhi = 2.3;
constexpr double kDeltaSwitch = 1.0;
constexpr double kEtaPhi = 1e-4;
constexpr double kAlphaMin = 1e-12;
constexpr double kKappaSigma = 1e10;  // dual safeguard
constexpr double kKappaEps = 10.0;    // barrier tolerance factor
constexpr double kKappaMu = 0.2;
constexpr double kThetaMu = 1.5;
constexpr double kPushIn = 1e-2;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

class Solver {
 public:
  Solver(const transcribe::StructuredNlp& nlp, const IpmOptions& opts, const backend::Backend& backend)
      : nlp_(nlp), opts_(opts), ec_(nlp, backend), red_(nlp), kkt_(nlp, ec_, red_) {}

  Solution run();

 private:
  const transcribe::StructuredNlp& nlp_;
  IpmOptions opts_;
  EvalContext ec_;
  Reduction red_;
  KktAssembler kkt_;

  Index ntot_ = 0;    // reduced primal entries (free slots + slacks)
  Index m_all_ = 0;   // all NLP rows
  Index m_kkt_ = 0;   // rows kept in the KKT system

  // iterate
  std::vector<double> x_;        // full slot vector, fixed slots pinned
  std::vector<double> s_;        // slack values per slack ordinal
  std::vector<double> lambda_;   // per kept row ordinal (scaled problem)
  std::vector<double> zl_, zu_;  // per reduced primal entry
  double mu_ = 1e-1, tau_ = 0.99;

  // bounds on the reduced primal vector v = (x_free, s)
  std::vector<double> lb_, ub_;
  std::vector<char> has_lb_, has_ub_;

  // scaled constraint-row bounds (all rows)
  std::vector<double> lcon_s_, ucon_s_;

  // scratch
  std::vector<double> c_scaled_, grad_, g_, sigma_, rhs_, jtlam_, lambda_full_;

  // filter
  std::vector<std::pair<double, double>> filter_;
  double theta_min_ = 0.0, theta_max_ = kInf;

  double delta_last_ = 0.0;
  sparse::LdlFactor factor_;  // reused across iterations

  Solution sol_;

  double v_at(Index i) const {
    return i < kkt_.n_free ? x_[static_cast<size_t>(kkt_.free_slot[static_cast<size_t>(i)])]
                           : s_[static_cast<size_t>(i - kkt_.n_free)];
  }

  void setup_bounds();
  void initialize_iterate();
  void constraint_residual(const std::vector<double>& c_scaled, std::vector<double>& g) const;
  double theta_of(const std::vector<double>& g) const;
  void compute_jt_lambda(std::vector<double>& out) const;
  double kkt_error(double mu, const std::vector<double>& g, double& comp_out, double& stat_out) const;
  void add_to_filter(double theta, double phi);
  bool filter_rejects(double theta, double phi) const;
  bool barrier_terms(const std::vector<double>& xt, const std::vector<double>& st, double& bar) const;
  std::span<const double> expand_lambda();

  bool solve_kkt(std::vector<double>& step, double wmax, bool& numeric_failure);
  std::vector<double> resolve_rhs(const std::vector<double>& rhs);
  void finish(SolveStatus status, std::string message, int iter, const std::vector<double>& g);
};

void Solver::setup_bounds() {
  ntot_ = kkt_.ntot;
  m_all_ = nlp_.m_con;
  m_kkt_ = kkt_.m;

  lcon_s_.resize(static_cast<size_t>(m_all_));
  ucon_s_.resize(static_cast<size_t>(m_all_));
  for (Index r = 0; r < m_all_; ++r) {
    const double sc = ec_.row_scale[static_cast<size_t>(r)];
    lcon_s_[static_cast<size_t>(r)] = sc * nlp_.lcon[static_cast<size_t>(r)];
    ucon_s_[static_cast<size_t>(r)] = sc * nlp_.ucon[static_cast<size_t>(r)];
  }

  lb_.assign(static_cast<size_t>(ntot_), -kInf);
  ub_.assign(static_cast<size_t>(ntot_), kInf);
  has_lb_.assign(static_cast<size_t>(ntot_), 0);
  has_ub_.assign(static_cast<size_t>(ntot_), 0);
  for (Index i = 0; i < kkt_.n_free; ++i) {
    const Index slot = kkt_.free_slot[static_cast<size_t>(i)];
    const double l = red_.xlo[static_cast<size_t>(slot)], u = red_.xhi[static_cast<size_t>(slot)];
    if (std::isfinite(l)) { lb_[static_cast<size_t>(i)] = l; has_lb_[static_cast<size_t>(i)] = 1; }
    if (std::isfinite(u)) { ub_[static_cast<size_t>(i)] = u; has_ub_[static_cast<size_t>(i)] = 1; }
  }
  for (Index k = 0; k < kkt_.n_slack; ++k) {
    const Index r = kkt_.slack_of[static_cast<size_t>(k)];
    const Index i = kkt_.n_free + k;
    if (std::isfinite(lcon_s_[static_cast<size_t>(r)])) {
      lb_[static_cast<size_t>(i)] = lcon_s_[static_cast<size_t>(r)];
      has_lb_[static_cast<size_t>(i)] = 1;
    }
    if (std::isfinite(ucon_s_[static_cast<size_t>(r)])) {
      ub_[static_cast<size_t>(i)] = ucon_s_[static_cast<size_t>(r)];
      has_ub_[static_cast<size_t>(i)] = 1;
    }
  }
  // relax bounds so equalities that touch box edges keep a strict interior
  const double relax = std::min(opts_.bound_relax_factor, opts_.tol);
  if (relax > 0.0) {
    for (Index i = 0; i < ntot_; ++i) {
      if (has_lb_[static_cast<size_t>(i)])
        lb_[static_cast<size_t>(i)] -= relax * std::max(1.0, std::abs(lb_[static_cast<size_t>(i)]));
      if (has_ub_[static_cast<size_t>(i)])
        ub_[static_cast<size_t>(i)] += relax * std::max(1.0, std::abs(ub_[static_cast<size_t>(i)]));
    }
  }
}

void Solver::initialize_iterate() {
  x_ = nlp_.x_start;
  for (Index slot = 0; slot < nlp_.nvar(); ++slot)
    if (red_.xlo[static_cast<size_t>(slot)] == red_.xhi[static_cast<size_t>(slot)])
      x_[static_cast<size_t>(slot)] = red_.xlo[static_cast<size_t>(slot)];

  auto push_into = [](double v, double l, double u) {
    const double w = std::min(1.0, u - l);
    double lo = std::isfinite(l) ? l + kPushIn * (std::isfinite(w) ? w : 1.0) : -kInf;
    double hi = std::isfinite(u) ? u - kPushIn * (std::isfinite(w) ? w : 1.0) : kInf;
    return std::clamp(v, lo, hi);
  };
  for (Index i = 0; i < kkt_.n_free; ++i) {
    const Index slot = kkt_.free_slot[static_cast<size_t>(i)];
    x_[static_cast<size_t>(slot)] =
        push_into(x_[static_cast<size_t>(slot)], lb_[static_cast<size_t>(i)], ub_[static_cast<size_t>(i)]);
  }

  ec_.eval_constraints(x_, c_scaled_);
  s_.assign(static_cast<size_t>(kkt_.n_slack), 0.0);
  for (Index k = 0; k < kkt_.n_slack; ++k) {
    const Index r = kkt_.slack_of[static_cast<size_t>(k)];
    const Index i = kkt_.n_free + k;
    s_[static_cast<size_t>(k)] =
        push_into(c_scaled_[static_cast<size_t>(r)], lb_[static_cast<size_t>(i)], ub_[static_cast<size_t>(i)]);
  }

  lambda_.assign(static_cast<size_t>(m_kkt_), 0.0);
  zl_.assign(static_cast<size_t>(ntot_), 0.0);
  zu_.assign(static_cast<size_t>(ntot_), 0.0);
  for (Index i = 0; i < ntot_; ++i) {
    if (has_lb_[static_cast<size_t>(i)]) zl_[static_cast<size_t>(i)] = mu_ / (v_at(i) - lb_[static_cast<size_t>(i)]);
    if (has_ub_[static_cast<size_t>(i)]) zu_[static_cast<size_t>(i)] = mu_ / (ub_[static_cast<size_t>(i)] - v_at(i));
  }
}

// residuals of the kept rows only; folded rows are enforced through bounds
void Solver::constraint_residual(const std::vector<double>& c_scaled, std::vector<double>& g) const {
  g.resize(static_cast<size_t>(m_kkt_));
  for (Index d = 0; d < m_kkt_; ++d) {
    const Index r = red_.dual_row[static_cast<size_t>(d)];
    const Index k = kkt_.slack_index[static_cast<size_t>(r)];
    g[static_cast<size_t>(d)] = c_scaled[static_cast<size_t>(r)] -
                                (k >= 0 ? s_[static_cast<size_t>(k)] : lcon_s_[static_cast<size_t>(r)]);
  }
}

double Solver::theta_of(const std::vector<double>& g) const {
  double t = 0.0;
  for (double v : g) t += std::abs(v);
  return t;
}

bool Solver::barrier_terms(const std::vector<double>& xt, const std::vector<double>& st, double& bar) const {
  bar = 0.0;
  for (Index i = 0; i < ntot_; ++i) {
    const double vi = i < kkt_.n_free ? xt[static_cast<size_t>(kkt_.free_slot[static_cast<size_t>(i)])]
                                      : st[static_cast<size_t>(i - kkt_.n_free)];
    if (has_lb_[static_cast<size_t>(i)]) {
      const double d = vi - lb_[static_cast<size_t>(i)];
      if (d <= 0.0) return false;
      bar += std::log(d);
    }
    if (has_ub_[static_cast<size_t>(i)]) {
      const double d = ub_[static_cast<size_t>(i)] - vi;
      if (d <= 0.0) return false;
      bar += std::log(d);
    }
  }
  return true;
}

void Solver::compute_jt_lambda(std::vector<double>& out) const {
  out.assign(static_cast<size_t>(ntot_), 0.0);
  for (size_t e = 0; e < ec_.jac_val.size(); ++e) {
    const Index dual = red_.dual_index[static_cast<size_t>(ec_.jac_row[e])];
    if (dual < 0) continue;
    const Index pj = kkt_.prim_index[static_cast<size_t>(ec_.jac_col[e])];
    if (pj < 0) continue;
    out[static_cast<size_t>(pj)] += ec_.jac_val[e] * lambda_[static_cast<size_t>(dual)];
  }
  for (Index k = 0; k < kkt_.n_slack; ++k) {
    const Index dual = red_.dual_index[static_cast<size_t>(kkt_.slack_of[static_cast<size_t>(k)])];
    out[static_cast<size_t>(kkt_.n_free + k)] -= lambda_[static_cast<size_t>(dual)];
  }
}

// scaled optimality error E_mu with norm-of-multipliers dual normalization
double Solver::kkt_error(double mu, const std::vector<double>& g, double& comp_out, double& stat_out) const {
  double znorm1 = 0.0, lnorm1 = 0.0;
  for (double v : zl_) znorm1 += std::abs(v);
  for (double v : zu_) znorm1 += std::abs(v);
  for (double v : lambda_) lnorm1 += std::abs(v);
  const double denom = static_cast<double>(std::max<Index>(1, m_kkt_ + ntot_));
  const double sd = std::max(100.0, (lnorm1 + znorm1) / denom) / 100.0;
  const double sc = std::max(100.0, znorm1 / static_cast<double>(std::max<Index>(1, ntot_))) / 100.0;

  double stat = 0.0;
  for (Index i = 0; i < ntot_; ++i) {
    const double rd = (i < kkt_.n_free ? grad_[static_cast<size_t>(kkt_.free_slot[static_cast<size_t>(i)])] : 0.0) +
                      jtlam_[static_cast<size_t>(i)] - zl_[static_cast<size_t>(i)] + zu_[static_cast<size_t>(i)];
    stat = std::max(stat, std::abs(rd));
  }
  double feas = 0.0;
  for (double v : g) feas = std::max(feas, std::abs(v));
  double comp = 0.0;
  for (Index i = 0; i < ntot_; ++i) {
    if (has_lb_[static_cast<size_t>(i)])
      comp = std::max(comp, std::abs((v_at(i) - lb_[static_cast<size_t>(i)]) * zl_[static_cast<size_t>(i)] - mu));
    if (has_ub_[static_cast<size_t>(i)])
      comp = std::max(comp, std::abs((ub_[static_cast<size_t>(i)] - v_at(i)) * zu_[static_cast<size_t>(i)] - mu));
  }
  comp_out = comp / sc;
  stat_out = stat / sd;
  return std::max({stat / sd, feas, comp / sc});
}

void Solver::add_to_filter(double theta, double phi) {
  const std::pair<double, double> entry{(1.0 - kGammaTheta) * theta, phi - kGammaPhi * theta};
  filter_.erase(std::remove_if(filter_.begin(), filter_.end(),
                               [&](const auto& e) { return e.first >= entry.first && e.second >= entry.second; }),
                filter_.end());
  filter_.push_back(entry);
}

bool Solver::filter_rejects(double theta, double phi) const {
  if (theta > theta_max_) return true;
  for (const auto& e : filter_)
    if (theta >= e.first && phi >= e.second) return true;
  return false;
}

Solution Solver::run() {
  Timer total_timer;
  Solution& sol = sol_;
  sol.stats.kkt_dim = kkt_.dim;

  mu_ = opts_.mu_init;
  tau_ = std::max(opts_.tau_min, 1.0 - mu_);

  if (red_.contradictory) {
    finish(SolveStatus::infeasible_detected, "contradictory variable bounds after folding box rows", 0, {});
    sol.stats.time_total = total_timer.elapsed();
    return sol;
  }

  ec_.compute_scaling(nlp_.x_start, opts_.scale);
  setup_bounds();
  initialize_iterate();

  const double mu_min = opts_.tol / 10.0;

  if (!ec_.eval_constraints_jacobian(x_, c_scaled_) || !ec_.eval_gradient(x_, grad_)) {
    finish(SolveStatus::eval_error, "evaluation failed at the initial point", 0, g_);
    sol.stats.time_total = total_timer.elapsed();
    return sol;
  }
  constraint_residual(c_scaled_, g_);
  theta_min_ = 1e-4 * std::max(1.0, theta_of(g_));
  theta_max_ = 1e4 * std::max(1.0, theta_of(g_));

  int iter = 0;
  int consecutive_restorations = 0;
  bool hold_mu = false;  // restoration raised mu; keep it until a step lands
  bool first_kkt_dumped = false;

  for (;; ++iter) {
    compute_jt_lambda(jtlam_);
    double comp = 0.0, stat = 0.0;
    const double e0 = kkt_error(0.0, g_, comp, stat);
    if (e0 <= opts_.tol) {
      finish(SolveStatus::optimal, "", iter, g_);
      break;
    }
    if (iter >= opts_.max_iter) {
      finish(SolveStatus::max_iter, "iteration limit reached", iter, g_);
      break;
    }

    // monotone barrier update, one reduction per iteration so the dual
    // re-centering stays consistent with the primal step
    {
      double cmu = 0.0, smu = 0.0;
      if (!hold_mu && mu_ > mu_min && kkt_error(mu_, g_, cmu, smu) <= kKappaEps * mu_) {
        mu_ = std::max(mu_min, std::min(kKappaMu * mu_, std::pow(mu_, kThetaMu)));
        tau_ = std::max(opts_.tau_min, 1.0 - mu_);
        filter_.clear();
      }
    }

    if (!ec_.eval_hessian(x_, expand_lambda())) {
      finish(SolveStatus::eval_error, "Hessian evaluation failed", iter, g_);
      break;
    }

    sigma_.assign(static_cast<size_t>(ntot_), 0.0);
    for (Index i = 0; i < ntot_; ++i) {
      double s = 0.0;
      if (has_lb_[static_cast<size_t>(i)]) s += zl_[static_cast<size_t>(i)] / (v_at(i) - lb_[static_cast<size_t>(i)]);
      if (has_ub_[static_cast<size_t>(i)]) s += zu_[static_cast<size_t>(i)] / (ub_[static_cast<size_t>(i)] - v_at(i));
      sigma_[static_cast<size_t>(i)] = s;
    }
    kkt_.assemble(ec_, sigma_);
    if (!opts_.dump_kkt.empty() && !first_kkt_dumped) {
      std::ofstream os(opts_.dump_kkt);
      sparse::write_matrix_market(kkt_.K, os);
      first_kkt_dumped = true;
    }

    rhs_.assign(static_cast<size_t>(kkt_.dim), 0.0);
    for (Index i = 0; i < ntot_; ++i) {
      double rd = (i < kkt_.n_free ? grad_[static_cast<size_t>(kkt_.free_slot[static_cast<size_t>(i)])] : 0.0) +
                  jtlam_[static_cast<size_t>(i)];
      if (has_lb_[static_cast<size_t>(i)]) rd -= mu_ / (v_at(i) - lb_[static_cast<size_t>(i)]);
      if (has_ub_[static_cast<size_t>(i)]) rd += mu_ / (ub_[static_cast<size_t>(i)] - v_at(i));
      rhs_[static_cast<size_t>(i)] = -rd;
    }
    for (Index d = 0; d < m_kkt_; ++d) rhs_[static_cast<size_t>(ntot_ + d)] = -g_[static_cast<size_t>(d)];

    std::vector<double> step;
    bool numeric_failure = false;
    if (!solve_kkt(step, ec_.max_abs_hessian(), numeric_failure)) {
      finish(SolveStatus::eval_error,
             numeric_failure ? "regularization exceeded its limit" : "linear solve failed", iter, g_);
      break;
    }

    double alpha_max = 1.0;
    for (Index i = 0; i < ntot_; ++i) {
      const double dv = step[static_cast<size_t>(i)];
      if (has_lb_[static_cast<size_t>(i)] && dv < 0.0)
        alpha_max = std::min(alpha_max, -tau_ * (v_at(i) - lb_[static_cast<size_t>(i)]) / dv);
      if (has_ub_[static_cast<size_t>(i)] && dv > 0.0)
        alpha_max = std::min(alpha_max, tau_ * (ub_[static_cast<size_t>(i)] - v_at(i)) / dv);
    }

    double dphi = 0.0;
    for (Index i = 0; i < ntot_; ++i) {
      const double dv = step[static_cast<size_t>(i)];
      double gphi = i < kkt_.n_free ? grad_[static_cast<size_t>(kkt_.free_slot[static_cast<size_t>(i)])] : 0.0;
      if (has_lb_[static_cast<size_t>(i)]) gphi -= mu_ / (v_at(i) - lb_[static_cast<size_t>(i)]);
      if (has_ub_[static_cast<size_t>(i)]) gphi += mu_ / (ub_[static_cast<size_t>(i)] - v_at(i));
      dphi += gphi * dv;
    }

    const double theta_k = theta_of(g_);
    double phi_k = 0.0;
    {
      double f_k = 0.0, bar = 0.0;
      if (!ec_.eval_objective(x_, f_k) || !barrier_terms(x_, s_, bar)) {
        finish(SolveStatus::eval_error, "barrier objective invalid at the current iterate", iter, g_);
        break;
      }
      phi_k = f_k - mu_ * bar;
    }

    // backtracking filter line search with second-order corrections
    double alpha = alpha_max;
    bool accepted = false, armijo_path = false, saw_eval_error = false;
    std::vector<double> x_trial, s_trial, c_trial, g_trial, grad_trial;
    double theta_t = 0.0, phi_t = 0.0;

    auto build_trial = [&](const std::vector<double>& dir, double a) {
      x_trial = x_;
      s_trial = s_;
      for (Index i = 0; i < kkt_.n_free; ++i)
        x_trial[static_cast<size_t>(kkt_.free_slot[static_cast<size_t>(i)])] += a * dir[static_cast<size_t>(i)];
      for (Index k = 0; k < kkt_.n_slack; ++k)
        s_trial[static_cast<size_t>(k)] += a * dir[static_cast<size_t>(kkt_.n_free + k)];
    };
    // evaluates theta/phi at the trial point; false on evaluation errors
    auto eval_trial = [&]() {
      if (!ec_.eval_constraints(x_trial, c_trial)) return false;
      g_trial.resize(static_cast<size_t>(m_kkt_));
      for (Index d = 0; d < m_kkt_; ++d) {
        const Index r = red_.dual_row[static_cast<size_t>(d)];
        const Index k = kkt_.slack_index[static_cast<size_t>(r)];
        g_trial[static_cast<size_t>(d)] =
            c_trial[static_cast<size_t>(r)] -
            (k >= 0 ? s_trial[static_cast<size_t>(k)] : lcon_s_[static_cast<size_t>(r)]);
      }
      theta_t = theta_of(g_trial);
      double f_t = 0.0, bar = 0.0;
      if (!barrier_terms(x_trial, s_trial, bar) || !ec_.eval_objective(x_trial, f_t)) return false;
      phi_t = f_t - mu_ * bar;
      return std::isfinite(phi_t);
    };
    auto acceptable = [&](double a) {
      if (filter_rejects(theta_t, phi_t)) return false;
      const bool descent = dphi < 0.0;
      const bool switching =
          descent && a * std::pow(-dphi, kSPhi) > kDeltaSwitch * std::pow(theta_k, kSTheta);
      if (theta_k <= theta_min_ && switching) {
        if (phi_t <= phi_k + kEtaPhi * a * dphi) {
          armijo_path = true;
          return true;
        }
        return false;
      }
      return theta_t <= (1.0 - kGammaTheta) * theta_k || phi_t <= phi_k - kGammaPhi * theta_k;
    };
    auto fraction_to_boundary = [&](const std::vector<double>& dir) {
      double a = 1.0;
      for (Index i = 0; i < ntot_; ++i) {
        const double dv = dir[static_cast<size_t>(i)];
        if (has_lb_[static_cast<size_t>(i)] && dv < 0.0)
          a = std::min(a, -tau_ * (v_at(i) - lb_[static_cast<size_t>(i)]) / dv);
        if (has_ub_[static_cast<size_t>(i)] && dv > 0.0)
          a = std::min(a, tau_ * (ub_[static_cast<size_t>(i)] - v_at(i)) / dv);
      }
      return a;
    };

    bool first_trial = true;
    while (alpha >= kAlphaMin) {
      build_trial(step, alpha);
      if (!eval_trial()) {
        saw_eval_error = true;
        first_trial = false;
        alpha *= 0.5;
        continue;
      }
      accepted = acceptable(alpha);

      // second-order corrections: the full step raised theta, so re-solve the
      // constraint block against the corrected residual (factor reused)
      if (!accepted && first_trial && theta_t >= theta_k && m_kkt_ > 0) {
        std::vector<double> g_soc(static_cast<size_t>(m_kkt_));
        for (Index d = 0; d < m_kkt_; ++d)
          g_soc[static_cast<size_t>(d)] =
              alpha * g_[static_cast<size_t>(d)] + g_trial[static_cast<size_t>(d)];
        double theta_prev = theta_t;
        for (int soc = 0; soc < 4 && !accepted; ++soc) {
          std::vector<double> rhs_soc = rhs_;
          for (Index d = 0; d < m_kkt_; ++d)
            rhs_soc[static_cast<size_t>(ntot_ + d)] = -g_soc[static_cast<size_t>(d)];
          std::vector<double> step_soc = resolve_rhs(rhs_soc);
          const double alpha_soc = fraction_to_boundary(step_soc);
          build_trial(step_soc, alpha_soc);
          if (!eval_trial()) break;
          if (acceptable(alpha_soc)) {
            accepted = true;
            step = std::move(step_soc);
            alpha = alpha_soc;
            break;
          }
          if (theta_t >= 0.99 * theta_prev) break;  // correction no longer helps
          theta_prev = theta_t;
          for (Index d = 0; d < m_kkt_; ++d)
            g_soc[static_cast<size_t>(d)] =
                alpha_soc * g_soc[static_cast<size_t>(d)] + g_trial[static_cast<size_t>(d)];
        }
        if (!accepted) {
          // restore the plain trial at alpha before continuing to backtrack
          build_trial(step, alpha);
          if (!eval_trial()) {
            saw_eval_error = true;
            first_trial = false;
            alpha *= 0.5;
            continue;
          }
        }
      }

      if (accepted) {
        // accepted points must also have evaluable first derivatives
        if (!ec_.eval_constraints_jacobian(x_trial, c_trial) || !ec_.eval_gradient(x_trial, grad_trial)) {
          saw_eval_error = true;
          accepted = false;
          armijo_path = false;
          first_trial = false;
          alpha *= 0.5;
          continue;
        }
        break;
      }
      first_trial = false;
      alpha *= 0.5;
    }

    if (!accepted) {
      if (consecutive_restorations >= 5) {
        finish(saw_eval_error ? SolveStatus::eval_error : SolveStatus::infeasible_detected,
               saw_eval_error ? "line search exhausted on evaluation errors" : "filter line search stalled",
               iter, g_);
        break;
      }
      // single-shot fallback: raise the barrier and retry
      ++consecutive_restorations;
      hold_mu = true;
      mu_ = std::min(mu_ * 10.0, 1e4);
      tau_ = std::max(opts_.tau_min, 1.0 - mu_);
      filter_.clear();
      // trial evals clobbered the shared buffers; restore the current point
      if (!ec_.eval_constraints_jacobian(x_, c_scaled_) || !ec_.eval_gradient(x_, grad_)) {
        finish(SolveStatus::eval_error, "evaluation failed at the current iterate", iter, g_);
        break;
      }
      constraint_residual(c_scaled_, g_);
      continue;
    }
    consecutive_restorations = 0;
    hold_mu = false;

    if (!armijo_path) add_to_filter(theta_k, phi_k);

    // dual direction for the bound multipliers (from the final step)
    std::vector<double> dzl(static_cast<size_t>(ntot_), 0.0), dzu(static_cast<size_t>(ntot_), 0.0);
    double alpha_z = 1.0;
    for (Index i = 0; i < ntot_; ++i) {
      const double dv = step[static_cast<size_t>(i)];
      if (has_lb_[static_cast<size_t>(i)]) {
        const double d = v_at(i) - lb_[static_cast<size_t>(i)];
        dzl[static_cast<size_t>(i)] = mu_ / d - zl_[static_cast<size_t>(i)] - zl_[static_cast<size_t>(i)] / d * dv;
      }
      if (has_ub_[static_cast<size_t>(i)]) {
        const double d = ub_[static_cast<size_t>(i)] - v_at(i);
        dzu[static_cast<size_t>(i)] = mu_ / d - zu_[static_cast<size_t>(i)] + zu_[static_cast<size_t>(i)] / d * dv;
      }
      if (dzl[static_cast<size_t>(i)] < 0.0 && zl_[static_cast<size_t>(i)] > 0.0)
        alpha_z = std::min(alpha_z, -tau_ * zl_[static_cast<size_t>(i)] / dzl[static_cast<size_t>(i)]);
      if (dzu[static_cast<size_t>(i)] < 0.0 && zu_[static_cast<size_t>(i)] > 0.0)
        alpha_z = std::min(alpha_z, -tau_ * zu_[static_cast<size_t>(i)] / dzu[static_cast<size_t>(i)]);
    }
    alpha_z = std::min(alpha_z, std::max(alpha, 1e-2));  // keep duals near the primal pace

    x_ = x_trial;
    s_ = s_trial;
    for (Index d = 0; d < m_kkt_; ++d) lambda_[static_cast<size_t>(d)] += alpha * step[static_cast<size_t>(ntot_ + d)];
    for (Index i = 0; i < ntot_; ++i) {
      zl_[static_cast<size_t>(i)] += alpha_z * dzl[static_cast<size_t>(i)];
      zu_[static_cast<size_t>(i)] += alpha_z * dzu[static_cast<size_t>(i)];
    }
    // dual safeguard keeps z within a factor of the barrier estimate
    for (Index i = 0; i < ntot_; ++i) {
      if (has_lb_[static_cast<size_t>(i)]) {
        const double d = v_at(i) - lb_[static_cast<size_t>(i)];
        zl_[static_cast<size_t>(i)] =
            std::clamp(zl_[static_cast<size_t>(i)], mu_ / (kKappaSigma * d), kKappaSigma * mu_ / d);
      }
      if (has_ub_[static_cast<size_t>(i)]) {
        const double d = ub_[static_cast<size_t>(i)] - v_at(i);
        zu_[static_cast<size_t>(i)] =
            std::clamp(zu_[static_cast<size_t>(i)], mu_ / (kKappaSigma * d), kKappaSigma * mu_ / d);
      }
    }

    c_scaled_ = std::move(c_trial);
    grad_ = std::move(grad_trial);
    constraint_residual(c_scaled_, g_);

    if (opts_.verbose) {
      double f_raw = 0.0;
      ec_.eval_objective(x_, f_raw);
      f_raw /= ec_.obj_scale;
      std::printf("iter %4d  obj %+.8e  theta %.3e  mu %.2e  alpha %.2e  alpha_z %.2e  delta_w %.1e\n",
                  iter + 1, nlp_.maximize ? -f_raw : f_raw, theta_of(g_), mu_, alpha, alpha_z, delta_last_);
    }
  }

  sol.stats.time_total = total_timer.elapsed();
  sol.stats.time_derivatives = ec_.time_derivatives;
  sol.stats.symbolic_analyses = kkt_.analyze_count;
  sol.stats.kkt_nnz = kkt_.K.nnz();
  return sol;
}

// full-row multiplier vector for the Hessian weights (folded rows use the
// slot's bound duals so curvature of nonlinear... folded rows are linear, 0)
std::span<const double> Solver::expand_lambda() {
  lambda_full_.assign(static_cast<size_t>(m_all_), 0.0);
  for (Index d = 0; d < m_kkt_; ++d)
    lambda_full_[static_cast<size_t>(red_.dual_row[static_cast<size_t>(d)])] = lambda_[static_cast<size_t>(d)];
  return lambda_full_;
}

bool Solver::solve_kkt(std::vector<double>& step, double wmax, bool& numeric_failure) {
  sparse::LdlFactor& factor = factor_;
  numeric_failure = false;

  Timer t_fact;
  const auto& sym = kkt_.symbolic();
  sol_.stats.factor_nnz = sym.nnz_L();

  double dw = 0.0;
  double dc = 0.0;
  bool first_bump = true;
  for (;;) {
    sparse::factorize(kkt_.K, sym, dw, dc, kkt_.ntot, factor);
    ++sol_.stats.factorizations;
    const auto& in = factor.inertia;
    if (in.positive == kkt_.ntot && in.negative == kkt_.m && in.zero == 0) break;
    if (first_bump) {
      // attribute missing curvature to the primal block first
      dw = delta_last_ > 0.0 ? std::max(1e-20, delta_last_ / opts_.reg.shrink)
                             : opts_.reg.initial_scale * std::max(1.0, wmax);
      first_bump = false;
    } else if (in.zero > 0 && dc == 0.0) {
      // zero pivots survived a primal bump: regularize the dual block
      dc = opts_.reg.dual_scale * std::pow(mu_, opts_.reg.dual_power);
    } else {
      dw *= opts_.reg.grow;
    }
    if (dw > opts_.reg.max_delta) {
      numeric_failure = true;
      sol_.stats.time_factorize += t_fact.elapsed();
      return false;
    }
  }
  if (dw > 0.0) delta_last_ = dw;
  sol_.stats.time_factorize += t_fact.elapsed();

  Timer t_solve;
  step = sparse::solve(factor, rhs_);
  {
    std::vector<double> r(static_cast<size_t>(kkt_.dim));
    sparse::matvec_sym(kkt_.K, step, r);
    double rnorm = 0.0, bnorm = 0.0;
    for (Index i = 0; i < kkt_.dim; ++i) {
      const double delta = i < kkt_.ntot ? factor.delta_w : -factor.delta_c;
      const double ri = rhs_[static_cast<size_t>(i)] - r[static_cast<size_t>(i)] -
                        delta * step[static_cast<size_t>(i)];
      rnorm = std::max(rnorm, std::abs(ri));
      bnorm = std::max(bnorm, std::abs(rhs_[static_cast<size_t>(i)]));
    }
    if (rnorm > opts_.refine_trigger * (1.0 + bnorm))
      sparse::refine(kkt_.K, factor, rhs_, step, opts_.refine_rounds);
  }
  sol_.stats.time_solve += t_solve.elapsed();
  return true;
}

// triangular solve against the factorization of the current iteration
std::vector<double> Solver::resolve_rhs(const std::vector<double>& rhs) {
  Timer t_solve;
  std::vector<double> step = sparse::solve(factor_, rhs);
  std::vector<double> r(static_cast<size_t>(kkt_.dim));
  sparse::matvec_sym(kkt_.K, step, r);
  double rnorm = 0.0, bnorm = 0.0;
  for (Index i = 0; i < kkt_.dim; ++i) {
    const double delta = i < kkt_.ntot ? factor_.delta_w : -factor_.delta_c;
    const double ri = rhs[static_cast<size_t>(i)] - r[static_cast<size_t>(i)] - delta * step[static_cast<size_t>(i)];
    rnorm = std::max(rnorm, std::abs(ri));
    bnorm = std::max(bnorm, std::abs(rhs[static_cast<size_t>(i)]));
  }
  if (rnorm > opts_.refine_trigger * (1.0 + bnorm))
    sparse::refine(kkt_.K, factor_, rhs, step, opts_.refine_rounds);
  sol_.stats.time_solve += t_solve.elapsed();
  return step;
}

void Solver::finish(SolveStatus status, std::string message, int iter, const std::vector<double>& g) {
  Solution& sol = sol_;
  sol.status = status;
  sol.message = std::move(message);
  sol.iterations = iter;
  sol.stats.iterations = iter;
  sol.x = x_.empty() ? nlp_.x_start : x_;

  // multipliers in the unscaled problem; folded rows recover theirs from the
  // slot's bound duals
  sol.lambda.assign(static_cast<size_t>(nlp_.m_con), 0.0);
  for (Index d = 0; d < static_cast<Index>(lambda_.size()); ++d) {
    const Index r = red_.dual_row[static_cast<size_t>(d)];
    sol.lambda[static_cast<size_t>(r)] =
        lambda_[static_cast<size_t>(d)] * ec_.row_scale[static_cast<size_t>(r)] / ec_.obj_scale;
  }
  sol.z_lower.assign(static_cast<size_t>(nlp_.nvar()), 0.0);
  sol.z_upper.assign(static_cast<size_t>(nlp_.nvar()), 0.0);
  if (static_cast<Index>(zl_.size()) == kkt_.ntot) {
    for (Index i = 0; i < kkt_.n_free; ++i) {
      sol.z_lower[static_cast<size_t>(kkt_.free_slot[static_cast<size_t>(i)])] =
          zl_[static_cast<size_t>(i)] / ec_.obj_scale;
      sol.z_upper[static_cast<size_t>(kkt_.free_slot[static_cast<size_t>(i)])] =
          zu_[static_cast<size_t>(i)] / ec_.obj_scale;
    }
  }
  for (Index r = 0; r < nlp_.m_con; ++r) {
    const Index slot = red_.row_slot[static_cast<size_t>(r)];
    if (slot < 0) continue;
    // attribute the slot's bound force to its folded row
    sol.lambda[static_cast<size_t>(r)] =
        sol.z_lower[static_cast<size_t>(slot)] - sol.z_upper[static_cast<size_t>(slot)];
  }

  double f_scaled = 0.0;
  if (!x_.empty()) ec_.eval_objective(x_, f_scaled);
  const double f_raw = f_scaled / ec_.obj_scale;
  sol.objective = nlp_.maximize ? -f_raw : f_raw;

  if (static_cast<Index>(g.size()) == m_kkt_ && static_cast<Index>(jtlam_.size()) == ntot_ &&
      static_cast<Index>(grad_.size()) == nlp_.nvar()) {
    double theta_raw = 0.0;
    for (Index d = 0; d < m_kkt_; ++d) {
      const Index r = red_.dual_row[static_cast<size_t>(d)];
      theta_raw = std::max(theta_raw, std::abs(g[static_cast<size_t>(d)]) / ec_.row_scale[static_cast<size_t>(r)]);
    }
    sol.theta = theta_raw;
    double comp = 0.0, stat = 0.0;
    kkt_error(0.0, g, comp, stat);
    sol.stationarity = stat / ec_.obj_scale;
    sol.complementarity = comp / ec_.obj_scale;
  }
}

}  // namespace

const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::infeasible_detected: return "infeasible_detected";
    case SolveStatus::eval_error: return "eval_error";
  }
  return "unknown";
}

Solution solve(const transcribe::StructuredNlp& nlp, const IpmOptions& opts,
               const backend::Backend& backend) {
  Solver solver(nlp, opts, backend);
  return solver.run();
}

StructureReport analyze_structure(const transcribe::StructuredNlp& nlp) {
  backend::Backend serial(backend::Backend::Kind::serial);
  EvalContext ec(nlp, serial);
  Reduction red(nlp);
  KktAssembler kkt(nlp, ec, red);
  StructureReport rep;
  rep.nvar = nlp.nvar();
  rep.m_con = nlp.m_con;
  rep.kkt_dim = kkt.dim;
  rep.kkt_nnz = kkt.K.nnz();
  rep.factor_nnz = kkt.symbolic().nnz_L();
  return rep;
}

void Solution::write_json(std::ostream& os) const {
  nlohmann::json j;
  j["status"] = status_name(status);
  if (!message.empty()) j["message"] = message;
  j["objective"] = objective;
  j["iterations"] = iterations;
  j["residuals"]["theta"] = theta;
  j["residuals"]["stationarity"] = stationarity;
  j["residuals"]["complementarity"] = complementarity;
  j["stats"]["factorizations"] = stats.factorizations;
  j["stats"]["symbolic_analyses"] = stats.symbolic_analyses;
  j["stats"]["kkt_dim"] = stats.kkt_dim;
  j["stats"]["kkt_nnz"] = stats.kkt_nnz;
  j["stats"]["factor_nnz"] = stats.factor_nnz;
  j["timings"]["total"] = stats.time_total;
  j["timings"]["derivatives"] = stats.time_derivatives;
  j["timings"]["factorize"] = stats.time_factorize;
  j["timings"]["solve"] = stats.time_solve;
  os << j.dump(2) << "\n";
}

}  // namespace octrans::ipm

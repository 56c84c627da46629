#include "rotperm/drm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "rotperm/errors.hpp"
#include "rotperm/stats.hpp"

namespace rotperm {

namespace {

constexpr double kExpGuard = 500.0;  // reject iterates with theta'q beyond this

// Softmax weights and profile log-EL at theta. W(t,s) = exp(theta_s'q_t - lse_t).
struct ProfileEval {
  double loglik = -std::numeric_limits<double>::infinity();
  Eigen::MatrixXd w;
};

ProfileEval profile_eval(const DrmData& data, const Eigen::MatrixXd& theta,
                         bool need_weights) {
  const int n_obs = int(data.values.size());
  Eigen::MatrixXd z = data.q * theta.transpose();  // N x (K+1)
  Eigen::VectorXd rowmax = z.rowwise().maxCoeff();
  Eigen::ArrayXXd shifted = (z.array().colwise() - rowmax.array()).exp();
  Eigen::ArrayXd rowsum = shifted.rowwise().sum();

  ProfileEval out;
  double lse_total = (rowmax.array() + rowsum.log()).sum();
  double linear = 0.0;
  for (int s = 1; s < data.num_pops; ++s)
    linear += data.pop_q_total.row(s).dot(theta.row(s));
  out.loglik = -lse_total + linear - n_obs * std::log(double(data.per_pop));
  if (need_weights)
    out.w = (shifted.colwise() / rowsum).matrix();
  return out;
}

int theta_dofs(const DrmData& data) {
  return (data.num_pops - 1) * int(data.q.cols());
}

Eigen::MatrixXd unpack_theta(const DrmData& data, const Eigen::VectorXd& v) {
  const int d = int(data.q.cols());
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(data.num_pops, d);
  for (int s = 1; s < data.num_pops; ++s)
    theta.row(s) = v.segment((s - 1) * d, d).transpose();
  return theta;
}

}  // namespace

DrmData make_drm_data(const RotatingPanelSample& sample,
                      const BasisFunction& basis) {
  DrmData data;
  data.basis = basis;
  data.num_pops = sample.num_occasions();
  const int d = basis.dim;

  std::vector<double> all;
  std::vector<int> pops;
  int per_pop = -1;
  for (int k = 0; k < data.num_pops; ++k) {
    const auto vals = sample.occasion_values(k);
    if (per_pop < 0) per_pop = int(vals.size());
    if (int(vals.size()) != per_pop)
      throw FitError("DRM fit requires equal sample sizes per occasion");
    for (double v : vals) {
      all.push_back(v);
      pops.push_back(k);
    }
  }
  if (per_pop <= 0) throw FitError("DRM fit on empty sample");

  const int n_obs = int(all.size());
  data.per_pop = per_pop;
  data.values = Eigen::Map<Eigen::VectorXd>(all.data(), n_obs);
  data.pop = std::move(pops);
  data.q.resize(n_obs, d);
  data.pop_q_total = Eigen::MatrixXd::Zero(data.num_pops, d);
  std::vector<double> row(d);
  for (int t = 0; t < n_obs; ++t) {
    basis.eval(all[t], row.data());
    for (int c = 0; c < d; ++c) data.q(t, c) = row[c];
    data.pop_q_total.row(data.pop[t]) += data.q.row(t);
  }
  return data;
}

DrmFit::DrmFit(DrmData data, Eigen::MatrixXd theta, double loglik)
    : data_(std::move(data)), theta_(std::move(theta)), loglik_(loglik) {
  // p_t = exp(-lse_t) / (nr), evaluated with the usual max shift.
  const int n_obs = int(data_.values.size());
  weights_.resize(n_obs);
  Eigen::MatrixXd z = data_.q * theta_.transpose();
  Eigen::VectorXd rowmax = z.rowwise().maxCoeff();
  Eigen::ArrayXd rowsum =
      (z.array().colwise() - rowmax.array()).exp().rowwise().sum();
  for (int t = 0; t < n_obs; ++t)
    weights_[t] = std::exp(-rowmax[t] - std::log(rowsum[t]) -
                           std::log(double(data_.per_pop)));
  sorted_idx_.resize(n_obs);
  std::iota(sorted_idx_.begin(), sorted_idx_.end(), 0);
  std::sort(sorted_idx_.begin(), sorted_idx_.end(), [&](int a, int b) {
    return data_.values[a] < data_.values[b];
  });
}

double DrmFit::cdf(int j, double y) const {
  if (j < 0 || j >= data_.num_pops)
    throw std::out_of_range("cdf: occasion out of range");
  double total = 0.0;
  for (int t = 0; t < int(data_.values.size()); ++t) {
    if (data_.values[t] <= y)
      total += weights_[t] *
               std::exp(std::min(kExpGuard, theta_.row(j).dot(data_.q.row(t))));
  }
  return total;
}

double DrmFit::quantile(int j, double level) const {
  if (j < 0 || j >= data_.num_pops)
    throw std::out_of_range("quantile: occasion out of range");
  const int n_obs = int(data_.values.size());
  double cum = 0.0;
  for (int s = 0; s < n_obs; ++s) {
    const int t = sorted_idx_[s];
    cum += weights_[t] *
           std::exp(std::min(kExpGuard, theta_.row(j).dot(data_.q.row(t))));
    const bool group_end =
        s + 1 == n_obs ||
        data_.values[sorted_idx_[s + 1]] > data_.values[t];
    if (group_end && cum >= level - 1e-12) return data_.values[t];
  }
  return data_.values[sorted_idx_.back()];
}

double DrmFit::max_constraint_residual() const {
  double worst = 0.0;
  for (int s = 0; s < data_.num_pops; ++s) {
    double total = 0.0;
    for (int t = 0; t < int(data_.values.size()); ++t)
      total += weights_[t] *
               std::exp(std::min(kExpGuard, theta_.row(s).dot(data_.q.row(t))));
    worst = std::max(worst, std::fabs(total - 1.0));
  }
  return worst;
}

DrmFit fit_profile_data(DrmData data, const Eigen::MatrixXd* theta0) {
  const int num_pops = data.num_pops;
  const int d = int(data.q.cols());
  const int dofs = theta_dofs(data);

  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(num_pops, d);
  if (theta0) {
    if (theta0->rows() != num_pops || theta0->cols() != d)
      throw FitError("profile fit: bad starting theta shape");
    theta = *theta0;
    theta.row(0).setZero();
  }

  if (dofs == 0) {
    const auto ev = profile_eval(data, theta, false);
    return DrmFit(std::move(data), std::move(theta), ev.loglik);
  }

  const double tol = 1e-9 * std::max(1.0, double(data.per_pop));
  auto ev = profile_eval(data, theta, true);
  for (int iter = 0; iter < 200; ++iter) {
    // Gradient of the dual criterion for s = 1..K.
    Eigen::MatrixXd qw = data.q.transpose() * ev.w;  // d x (K+1)
    Eigen::VectorXd grad(dofs);
    for (int s = 1; s < num_pops; ++s)
      grad.segment((s - 1) * d, d) =
          data.pop_q_total.row(s).transpose() - qw.col(s);
    if (grad.lpNorm<Eigen::Infinity>() < tol)
      return DrmFit(std::move(data), std::move(theta), ev.loglik);

    // Negated Hessian: A[(s,a),(s',b)] = sum_t q_ta q_tb (d_ss' w_ts - w_ts w_ts').
    Eigen::MatrixXd neg_hess(dofs, dofs);
    for (int s = 1; s < num_pops; ++s) {
      for (int s2 = s; s2 < num_pops; ++s2) {
        Eigen::ArrayXd coef =
            -ev.w.col(s).array() * ev.w.col(s2).array();
        if (s2 == s) coef += ev.w.col(s).array();
        Eigen::MatrixXd block =
            data.q.transpose() *
            (data.q.array().colwise() * coef).matrix();
        neg_hess.block((s - 1) * d, (s2 - 1) * d, d, d) = block;
        if (s2 != s)
          neg_hess.block((s2 - 1) * d, (s - 1) * d, d, d) = block.transpose();
      }
    }

    Eigen::VectorXd delta;
    double ridge = 0.0;
    for (;;) {
      Eigen::MatrixXd a = neg_hess;
      if (ridge > 0.0) a.diagonal().array() += ridge;
      delta = a.ldlt().solve(grad);
      if (delta.allFinite() && grad.dot(delta) > 0.0) break;
      ridge = (ridge == 0.0) ? 1e-8 * neg_hess.diagonal().maxCoeff() : 10 * ridge;
      if (!(ridge > 0.0) || ridge > 1e12)
        throw FitError("profile fit failed (singular Hessian)");
    }

    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h < 60; ++h) {
      Eigen::MatrixXd cand = theta;
      for (int s = 1; s < num_pops; ++s)
        cand.row(s) += step * delta.segment((s - 1) * d, d).transpose();
      auto cand_ev = profile_eval(data, cand, true);
      if (cand_ev.loglik > ev.loglik) {
        theta = std::move(cand);
        ev = std::move(cand_ev);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No ascent along the Newton direction: converged to numerical
      // precision or genuinely stuck.
      if (grad.lpNorm<Eigen::Infinity>() < 1e3 * tol)
        return DrmFit(std::move(data), std::move(theta), ev.loglik);
      throw FitError("profile fit failed (no ascent step)");
    }
    if (theta.lpNorm<Eigen::Infinity>() > 1e3)
      throw FitError("profile fit failed (parameters diverging)");
  }
  throw FitError("profile fit failed (max iterations)");
}

DrmFit fit_profile(const RotatingPanelSample& sample,
                   const BasisFunction& basis, const Eigen::MatrixXd* theta0) {
  return fit_profile_data(make_drm_data(sample, basis), theta0);
}

double pooled_percentile(const RotatingPanelSample& sample, double level) {
  auto pooled = sample.occasion_values(0);
  const auto occ1 = sample.occasion_values(1);
  pooled.insert(pooled.end(), occ1.begin(), occ1.end());
  return empirical_quantile(std::move(pooled), level);
}

double el_statistic(const RotatingPanelSample& sample,
                    const BasisFunction& basis, double level) {
  const DrmFit fit = fit_profile(sample, basis);
  return fit.quantile(1, level) - fit.quantile(0, level);
}

namespace {

struct ConstrEval {
  bool valid = false;
  Eigen::MatrixXd e;    // N x (K+1), exp(theta_s'q_t)
  Eigen::VectorXd p;    // N
  Eigen::ArrayXd ind;   // 1(y <= xi)
  Eigen::ArrayXd dind;  // ind - alpha
};

ConstrEval constr_eval(const DrmData& data, double level, double xi_hat,
                       const Eigen::MatrixXd& theta,
                       const Eigen::Vector2d& lambda,
                       LagrangeWeightForm form) {
  ConstrEval out;
  const int n_obs = int(data.values.size());
  const double nr = double(data.per_pop);
  Eigen::MatrixXd z = data.q * theta.transpose();
  if (z.lpNorm<Eigen::Infinity>() > kExpGuard) return out;
  out.e = z.array().exp().matrix();
  out.ind = (data.values.array() <= xi_hat).cast<double>();
  out.dind = out.ind - level;

  Eigen::ArrayXd denom(n_obs);
  if (form == LagrangeWeightForm::consistent) {
    denom = out.e.rowwise().sum().array() +
            lambda[0] * out.e.col(0).array() * out.dind +
            lambda[1] * out.e.col(1).array() * out.dind;
    denom *= nr;
  } else {
    denom = nr * out.e.rowwise().sum().array() +
            nr * double(data.num_pops) *
                (lambda[0] * (out.e.col(0).array() * out.ind - level) +
                 lambda[1] * (out.e.col(1).array() * out.ind - level));
  }
  if ((denom <= 0.0).any() || !denom.allFinite()) return out;
  out.p = denom.inverse().matrix();
  out.valid = true;
  return out;
}

Eigen::VectorXd residual_from_eval(const DrmData& data, double /*level*/,
                                   const Eigen::Vector2d& lambda,
                                   const ConstrEval& ev) {
  const int num_pops = data.num_pops;
  const int d = int(data.q.cols());
  const double nr = double(data.per_pop);
  Eigen::VectorXd f(num_pops + 2 + num_pops * d);

  for (int s = 0; s < num_pops; ++s)
    f[s] = ev.p.dot(ev.e.col(s)) - 1.0;
  for (int s = 0; s < 2; ++s)
    f[num_pops + s] =
        (ev.p.array() * ev.e.col(s).array() * ev.dind).sum();
  for (int s = 0; s < num_pops; ++s) {
    Eigen::ArrayXd factor = ev.p.array() * ev.e.col(s).array();
    if (s < 2) factor *= (1.0 + lambda[s] * ev.dind);
    f.segment(num_pops + 2 + s * d, d) =
        data.q.transpose() * factor.matrix() -
        data.pop_q_total.row(s).transpose() / nr;
  }
  return f;
}

// d(denominator)/dtheta_j has the form c_j(t) * q_t; d(denominator)/dlambda_l
// is a scalar per observation.
void denominator_derivatives(const DrmData& data, double level,
                             const Eigen::Vector2d& lambda,
                             const ConstrEval& ev, LagrangeWeightForm form,
                             std::vector<Eigen::ArrayXd>& dd_theta,
                             std::array<Eigen::ArrayXd, 2>& dd_lambda) {
  const int num_pops = data.num_pops;
  const double nr = double(data.per_pop);
  dd_theta.assign(num_pops, Eigen::ArrayXd());
  for (int j = 1; j < num_pops; ++j) {
    Eigen::ArrayXd c = ev.e.col(j).array();
    if (j < 2) {
      if (form == LagrangeWeightForm::consistent)
        c *= (1.0 + lambda[j] * ev.dind);
      else
        c += double(num_pops) * lambda[j] * ev.e.col(j).array() * ev.ind;
    }
    dd_theta[j] = nr * c;
  }
  for (int l = 0; l < 2; ++l) {
    if (form == LagrangeWeightForm::consistent)
      dd_lambda[l] = nr * ev.e.col(l).array() * ev.dind;
    else
      dd_lambda[l] =
          nr * double(num_pops) * (ev.e.col(l).array() * ev.ind - level);
  }
}

}  // namespace

Eigen::VectorXd constrained_residuals(const DrmData& data, double level,
                                      double xi_hat,
                                      const Eigen::MatrixXd& theta,
                                      const Eigen::Vector2d& lambda,
                                      LagrangeWeightForm form) {
  const auto ev = constr_eval(data, level, xi_hat, theta, lambda, form);
  if (!ev.valid)
    throw FitError("constrained residuals: invalid point (nonpositive weights)");
  return residual_from_eval(data, level, lambda, ev);
}

Eigen::MatrixXd constrained_jacobian(const DrmData& data, double level,
                                     double xi_hat,
                                     const Eigen::MatrixXd& theta,
                                     const Eigen::Vector2d& lambda,
                                     LagrangeWeightForm form) {
  const auto ev = constr_eval(data, level, xi_hat, theta, lambda, form);
  if (!ev.valid)
    throw FitError("constrained Jacobian: invalid point (nonpositive weights)");

  const int num_pops = data.num_pops;
  const int d = int(data.q.cols());
  const int rows = num_pops + 2 + num_pops * d;
  const int cols = (num_pops - 1) * d + 2;
  const int lam_col = (num_pops - 1) * d;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(rows, cols);

  std::vector<Eigen::ArrayXd> dd_theta;
  std::array<Eigen::ArrayXd, 2> dd_lambda;
  denominator_derivatives(data, level, lambda, ev, form, dd_theta, dd_lambda);

  const Eigen::ArrayXd p2 = ev.p.array().square();

  // Normalization and quantile rows share the pattern
  // d/dx sum_t p_t g_t = sum_t (-p_t^2 dD_t/dx g_t + p_t dg_t/dx).
  for (int s = 0; s < num_pops; ++s) {
    const Eigen::ArrayXd g = ev.e.col(s).array();
    for (int j = 1; j < num_pops; ++j) {
      Eigen::ArrayXd coef = -p2 * dd_theta[j] * g;
      if (j == s) coef += ev.p.array() * g;
      jac.block(s, (j - 1) * d, 1, d) =
          (data.q.transpose() * coef.matrix()).transpose();
    }
    for (int l = 0; l < 2; ++l)
      jac(s, lam_col + l) = -(p2 * dd_lambda[l] * g).sum();
  }
  for (int s = 0; s < 2; ++s) {
    const Eigen::ArrayXd g = ev.e.col(s).array() * ev.dind;
    const int row = num_pops + s;
    for (int j = 1; j < num_pops; ++j) {
      Eigen::ArrayXd coef = -p2 * dd_theta[j] * g;
      if (j == s) coef += ev.p.array() * g;
      jac.block(row, (j - 1) * d, 1, d) =
          (data.q.transpose() * coef.matrix()).transpose();
    }
    for (int l = 0; l < 2; ++l)
      jac(row, lam_col + l) = -(p2 * dd_lambda[l] * g).sum();
  }

  // Score rows: g_t = E_st [1 + lambda_s dind_t] q_t.
  for (int s = 0; s < num_pops; ++s) {
    Eigen::ArrayXd f = ev.e.col(s).array();
    if (s < 2) f *= (1.0 + lambda[s] * ev.dind);
    const int row0 = num_pops + 2 + s * d;
    for (int j = 1; j < num_pops; ++j) {
      Eigen::ArrayXd coef = -p2 * dd_theta[j] * f;
      if (j == s) coef += ev.p.array() * f;
      jac.block(row0, (j - 1) * d, d, d) =
          data.q.transpose() * (data.q.array().colwise() * coef).matrix();
    }
    for (int l = 0; l < 2; ++l) {
      Eigen::ArrayXd coef = -p2 * dd_lambda[l] * f;
      if (l == s)
        coef += ev.p.array() * ev.e.col(s).array() * ev.dind;
      jac.block(row0, lam_col + l, d, 1) =
          data.q.transpose() * coef.matrix();
    }
  }
  return jac;
}

namespace {

// Maximize c'x subject to A x = b, x >= 0 via a dense two-phase simplex
// with Bland's rule. Returns the optimum, or nullopt if infeasible.
std::optional<double> simplex_max(Eigen::MatrixXd a, Eigen::VectorXd b,
                                  const Eigen::VectorXd& c) {
  const int rows = int(a.rows());
  const int cols = int(a.cols());
  constexpr double kTol = 1e-11;

  for (int i = 0; i < rows; ++i)
    if (b[i] < 0) {
      a.row(i) = -a.row(i);
      b[i] = -b[i];
    }

  // Tableau columns: [real vars | artificials | rhs].
  Eigen::MatrixXd tab(rows, cols + rows + 1);
  tab.leftCols(cols) = a;
  tab.middleCols(cols, rows) = Eigen::MatrixXd::Identity(rows, rows);
  tab.col(cols + rows) = b;
  std::vector<int> basis(rows);
  for (int i = 0; i < rows; ++i) basis[i] = cols + i;

  auto pivot = [&](int prow, int pcol) {
    tab.row(prow) /= tab(prow, pcol);
    for (int i = 0; i < rows; ++i)
      if (i != prow && std::fabs(tab(i, pcol)) > 0)
        tab.row(i) -= tab(i, pcol) * tab.row(prow);
    basis[prow] = pcol;
  };

  auto run_phase = [&](const Eigen::VectorXd& cost, int usable_cols) -> bool {
    for (int guard = 0; guard < 20000; ++guard) {
      // Reduced costs for the current basis.
      Eigen::VectorXd y = Eigen::VectorXd::Zero(rows);
      for (int i = 0; i < rows; ++i) y[i] = cost[basis[i]];
      int enter = -1;
      for (int j = 0; j < usable_cols; ++j) {
        const double reduced = cost[j] - y.dot(tab.col(j));
        if (reduced > kTol) {
          enter = j;
          break;  // Bland: first improving column
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best = 0.0;
      for (int i = 0; i < rows; ++i) {
        if (tab(i, enter) > kTol) {
          const double ratio = tab(i, cols + rows) / tab(i, enter);
          if (leave < 0 || ratio < best - 1e-15 ||
              (std::fabs(ratio - best) <= 1e-15 && basis[i] < basis[leave])) {
            leave = i;
            best = ratio;
          }
        }
      }
      if (leave < 0) return false;  // unbounded
      pivot(leave, enter);
    }
    return false;
  };

  // Phase 1: maximize -(sum of artificials).
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(cols + rows);
  phase1.segment(cols, rows).setConstant(-1.0);
  if (!run_phase(phase1, cols + rows)) return std::nullopt;
  double art_sum = 0.0;
  for (int i = 0; i < rows; ++i)
    if (basis[i] >= cols) art_sum += tab(i, cols + rows);
  if (art_sum > 1e-9) return std::nullopt;

  // Drive leftover zero-level artificials out where possible.
  for (int i = 0; i < rows; ++i) {
    if (basis[i] < cols) continue;
    for (int j = 0; j < cols; ++j)
      if (std::fabs(tab(i, j)) > kTol) {
        pivot(i, j);
        break;
      }
  }

  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(cols + rows);
  phase2.head(cols) = c;
  // Artificial columns are banned in phase 2 (usable_cols = cols).
  if (!run_phase(phase2, cols)) return std::nullopt;

  double value = 0.0;
  for (int i = 0; i < rows; ++i)
    if (basis[i] < cols) value += c[basis[i]] * tab(i, cols + rows);
  return value;
}

}  // namespace

bool convex_hull_check(const RotatingPanelSample& sample,
                       const BasisFunction& basis,
                       const Eigen::MatrixXd& theta, double level,
                       double xi_hat) {
  const DrmData data = make_drm_data(sample, basis);
  const int n_obs = int(data.values.size());
  if (n_obs < 2) return false;
  const int num_pops = data.num_pops;

  Eigen::MatrixXd z = data.q * theta.transpose();
  if (z.lpNorm<Eigen::Infinity>() > 300.0) return false;
  Eigen::MatrixXd e = z.array().exp().matrix();
  Eigen::ArrayXd ind = (data.values.array() <= xi_hat).cast<double>();

  // Residual vectors v_t, one per observation.
  const int vdim = num_pops + 2;
  Eigen::MatrixXd v(vdim, n_obs);
  for (int s = 0; s < num_pops; ++s)
    v.row(s) = (e.col(s).array() - 1.0).transpose();
  for (int s = 0; s < 2; ++s)
    v.row(num_pops + s) = (e.col(s).array() * ind - level).transpose();

  // 0 strictly inside conv{v_t} (relative to its span) iff some weights
  // p_t >= delta > 0 with sum p = 1 and sum p_t v_t = 0. Substituting
  // p = q + delta with q >= 0 gives the LP below in (q, delta).
  Eigen::MatrixXd a(vdim + 1, n_obs + 1);
  a.block(0, 0, vdim, n_obs) = v;
  a.block(0, n_obs, vdim, 1) = v.rowwise().sum();
  a.row(vdim).setOnes();
  a(vdim, n_obs) = double(n_obs);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(vdim + 1);
  b[vdim] = 1.0;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n_obs + 1);
  c[n_obs] = 1.0;

  const auto delta = simplex_max(std::move(a), std::move(b), c);
  return delta.has_value() && *delta > 1e-10;
}

ConstrainedFit fit_constrained(const RotatingPanelSample& sample,
                               const BasisFunction& basis, double level,
                               LagrangeWeightForm form,
                               const DrmFit* profile) {
  if (!(level > 0.0 && level < 1.0))
    throw FitError("constrained fit: level must be in (0,1)");

  std::optional<DrmFit> own;
  if (!profile) {
    own = fit_profile(sample, basis);
    profile = &*own;
  }
  const DrmData& data = profile->data();
  const double xi_hat = pooled_percentile(sample, level);

  for (int s = 0; s < 2; ++s) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int t = 0; t < int(data.values.size()); ++t) {
      if (data.pop[t] != s) continue;
      lo = std::min(lo, data.values[t]);
      hi = std::max(hi, data.values[t]);
    }
    if (!(xi_hat > lo && xi_hat < hi))
      throw PercentileOutsideRange(
          "percentile outside range: pooled percentile " +
          std::to_string(xi_hat) + " is not strictly inside the occasion-" +
          std::to_string(s) +
          " value range; the population appears to have changed too much "
          "for the constrained fit to be meaningful");
  }

  if (!convex_hull_check(sample, basis, profile->theta(), level, xi_hat))
    throw ConvexHullError("convex hull violated at the starting point");

  const int num_pops = data.num_pops;
  const int d = int(data.q.cols());
  const int dofs = (num_pops - 1) * d + 2;

  Eigen::VectorXd v(dofs);
  for (int s = 1; s < num_pops; ++s)
    v.segment((s - 1) * d, d) = profile->theta().row(s).transpose();
  v.segment((num_pops - 1) * d, 2).setZero();

  auto split = [&](const Eigen::VectorXd& x) {
    Eigen::MatrixXd theta = unpack_theta(data, x.head((num_pops - 1) * d));
    Eigen::Vector2d lambda = x.tail(2);
    return std::make_pair(theta, lambda);
  };

  auto [theta, lambda] = split(v);
  ConstrEval ev = constr_eval(data, level, xi_hat, theta, lambda, form);
  if (!ev.valid) throw SolverDiverged("solver diverged: bad starting point");
  Eigen::VectorXd f = residual_from_eval(data, level, lambda, ev);

  constexpr double kTarget = 1e-9;
  constexpr double kAccept = 1e-8;
  bool stalled = false;
  for (int iter = 0; iter < 200 && !stalled; ++iter) {
    if (f.lpNorm<Eigen::Infinity>() < kTarget) break;
    Eigen::MatrixXd jac =
        constrained_jacobian(data, level, xi_hat, theta, lambda, form);
    Eigen::VectorXd delta = jac.colPivHouseholderQr().solve(-f);
    if (!delta.allFinite())
      throw SolverDiverged("solver diverged: non-finite Newton step");

    double step = 1.0;
    bool accepted = false;
    const double f_norm = f.norm();
    for (int h = 0; h < 30; ++h) {
      const Eigen::VectorXd cand = v + step * delta;
      auto [cand_theta, cand_lambda] = split(cand);
      ConstrEval cand_ev =
          constr_eval(data, level, xi_hat, cand_theta, cand_lambda, form);
      if (cand_ev.valid) {
        Eigen::VectorXd cand_f =
            residual_from_eval(data, level, cand_lambda, cand_ev);
        if (cand_f.norm() < f_norm) {
          v = cand;
          theta = std::move(cand_theta);
          lambda = cand_lambda;
          ev = std::move(cand_ev);
          f = std::move(cand_f);
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) stalled = true;
  }

  const double resid = f.lpNorm<Eigen::Infinity>();
  if (resid > kAccept)
    throw SolverDiverged("solver diverged: residual " + std::to_string(resid) +
                         " above tolerance");

  ConstrainedFit fit;
  fit.theta = theta;
  fit.lambda = lambda;
  fit.t_mult = Eigen::VectorXd::Constant(num_pops, double(data.per_pop));
  fit.xi_hat = xi_hat;
  fit.level = level;
  fit.weights = ev.p;
  fit.residual_norm = resid;
  double linear = 0.0;
  for (int s = 1; s < num_pops; ++s)
    linear += data.pop_q_total.row(s).dot(theta.row(s));
  fit.loglik = ev.p.array().log().sum() + linear;
  return fit;
}

double elr_statistic(const RotatingPanelSample& sample,
                     const BasisFunction& basis, double level,
                     LagrangeWeightForm form) {
  const DrmFit profile = fit_profile(sample, basis);
  const ConstrainedFit constrained =
      fit_constrained(sample, basis, level, form, &profile);
  return profile.loglik() - constrained.loglik;
}

}  // namespace rotperm

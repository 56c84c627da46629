#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rotperm/basis.hpp"
#include "rotperm/panel.hpp"

namespace rotperm {

// Flattened observations prepared for density-ratio-model fitting.
// Observations are stored occasion-major in membership order; every
// occasion must contribute the same number of values (n*r).
struct DrmData {
  int num_pops = 0;  // K + 1
  int per_pop = 0;   // n * r
  Eigen::VectorXd values;       // N = num_pops * per_pop
  Eigen::MatrixXd q;            // N x d, rows q(values[t])
  std::vector<int> pop;         // N, occasion of each row
  Eigen::MatrixXd pop_q_total;  // (K+1) x d, per-occasion column sums of q
  BasisFunction basis;
};

DrmData make_drm_data(const RotatingPanelSample& sample,
                      const BasisFunction& basis);

// Maximum composite-EL fit of the density ratio model
// dG_k = exp(theta_k' q(y)) dG_0 across all occasions.
class DrmFit {
 public:
  DrmFit(DrmData data, Eigen::MatrixXd theta, double loglik);

  // (K+1) x d; row 0 is identically zero.
  const Eigen::MatrixXd& theta() const { return theta_; }
  double loglik() const { return loglik_; }
  const BasisFunction& basis() const { return data_.basis; }
  int num_pops() const { return data_.num_pops; }

  // EL weights in the flattened observation order of DrmData.
  const Eigen::VectorXd& weights() const { return weights_; }

  // Fitted CDF of occasion j evaluated at y.
  double cdf(int j, double y) const;
  // inf{ y among observed values : cdf(j, y) >= level }.
  double quantile(int j, double level) const;

  // max_s | sum_t p_t exp(theta_s' q_t) - 1 |, for validation.
  double max_constraint_residual() const;

  const DrmData& data() const { return data_; }

 private:
  DrmData data_;
  Eigen::MatrixXd theta_;
  double loglik_;
  Eigen::VectorXd weights_;       // input order
  std::vector<int> sorted_idx_;   // data rows sorted by value
};

// Maximizes the profile composite log-EL over theta by Newton iteration
// with line search, starting from theta0 (or 0). Throws FitError on
// non-convergence, BasisDomainError if the basis does not cover the data.
DrmFit fit_profile(const RotatingPanelSample& sample,
                   const BasisFunction& basis,
                   const Eigen::MatrixXd* theta0 = nullptr);
DrmFit fit_profile_data(DrmData data, const Eigen::MatrixXd* theta0 = nullptr);

// Empirical quantile of the pooled occasion-0/occasion-1 values.
double pooled_percentile(const RotatingPanelSample& sample, double level);

// Difference of fitted-CDF quantiles xi(G1) - xi(G0) at the given level;
// the fit uses all occasions.
double el_statistic(const RotatingPanelSample& sample,
                    const BasisFunction& basis, double level);

// Two parameterizations of the constrained-weight denominator. The score
// and quantile equations of the root system imply `consistent`:
//   D_t = nr [ sum_s E_st + sum_{s<=1} lambda_s E_st (1(y_t<=xi) - alpha) ].
// `as_printed` keeps the variant with the nr(K+1) factor and the alpha
// term outside E_st:
//   D_t = nr sum_s E_st + nr(K+1) sum_{s<=1} lambda_s (E_st 1(y_t<=xi) - alpha).
// The two disagree whenever lambda != 0; tiny-instance oracle tests
// arbitrate (see tests/test_drm.cpp).
enum class LagrangeWeightForm { consistent, as_printed };

struct ConstrainedFit {
  Eigen::MatrixXd theta;   // (K+1) x d, row 0 zero
  Eigen::Vector2d lambda;  // quantile multipliers for s = 0, 1
  Eigen::VectorXd t_mult;  // K+1 normalization multipliers, analytically nr
  double xi_hat = 0.0;     // pooled percentile
  double level = 0.0;      // alpha_q
  double loglik = 0.0;     // attained constrained composite log-EL
  Eigen::VectorXd weights; // flattened order of DrmData
  double residual_norm = 0.0;  // max-norm of the full stacked system
};

// Solves the constrained root system (normalization s=0..K, quantile
// s=0,1, score s=0..K) by damped Newton with the analytic Jacobian,
// initialized at the profile fit with lambda = 0. Throws
// PercentileOutsideRange, ConvexHullError or SolverDiverged.
ConstrainedFit fit_constrained(const RotatingPanelSample& sample,
                               const BasisFunction& basis, double level,
                               LagrangeWeightForm form =
                                   LagrangeWeightForm::consistent,
                               const DrmFit* profile = nullptr);

// Stacked residual of the constrained system at (theta, lambda); layout:
// [normalization (K+1) | quantile (2) | score ((K+1)*d)].
Eigen::VectorXd constrained_residuals(const DrmData& data, double level,
                                      double xi_hat,
                                      const Eigen::MatrixXd& theta,
                                      const Eigen::Vector2d& lambda,
                                      LagrangeWeightForm form);

// Analytic Jacobian of the stacked residual with respect to
// [theta_1..theta_K, lambda_0, lambda_1].
Eigen::MatrixXd constrained_jacobian(const DrmData& data, double level,
                                     double xi_hat,
                                     const Eigen::MatrixXd& theta,
                                     const Eigen::Vector2d& lambda,
                                     LagrangeWeightForm form);

// True iff the zero vector lies strictly inside (relative to its span) the
// convex hull of the per-observation constraint-residual vectors
// ([exp(theta_s'q)-1]_s, [exp(theta_s'q) 1(y<=xi) - alpha]_{s=0,1}).
// Implemented as a small linear program.
bool convex_hull_check(const RotatingPanelSample& sample,
                       const BasisFunction& basis,
                       const Eigen::MatrixXd& theta, double level,
                       double xi_hat);

// sup profile log-EL minus sup constrained log-EL; nonnegative up to
// solver tolerance.
double elr_statistic(const RotatingPanelSample& sample,
                     const BasisFunction& basis, double level,
                     LagrangeWeightForm form = LagrangeWeightForm::consistent);

}  // namespace rotperm

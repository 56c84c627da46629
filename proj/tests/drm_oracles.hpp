#pragma once

// Brute-force reference routes for the two-occasion DRM fits, independent
// of the production Newton solvers. Only used by tests.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "rotperm/drm.hpp"

namespace rotperm::testing {

// Dual profile criterion for K+1 = 2 and basis (1, y), evaluated directly:
// l(a,b) = -sum_t log(1 + exp(a + b y_t)) - N log(nr) + n1*a + b*sum_1 y.
inline double profile_value_2pop(const std::vector<double>& values,
                                 const std::vector<int>& pop, int per_pop,
                                 double a, double b) {
  double lse = 0.0, lin = 0.0;
  for (size_t t = 0; t < values.size(); ++t) {
    const double z = a + b * values[t];
    // log(1 + e^z) without overflow
    lse += z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    if (pop[t] == 1) lin += z;
  }
  return -lse + lin - double(values.size()) * std::log(double(per_pop));
}

struct GridResult {
  double value = -std::numeric_limits<double>::infinity();
  double a = 0.0, b = 0.0;
  bool interior = true;  // argmax strictly inside the search box
};

// Grid search over [-box, box]^2 with `steps` cells per axis, then two
// tenfold refinements around the best point.
template <typename F>
GridResult grid_maximize(F&& f, double box, int steps, int refinements) {
  GridResult best;
  double cx = 0.0, cy = 0.0, half = box;
  for (int level = 0; level <= refinements; ++level) {
    const double step = 2.0 * half / steps;
    GridResult local;
    for (int i = 0; i <= steps; ++i)
      for (int j = 0; j <= steps; ++j) {
        const double a = cx - half + i * step;
        const double b = cy - half + j * step;
        const double v = f(a, b);
        if (v > local.value) local = {v, a, b, true};
      }
    if (level == 0) {
      const double edge = box - 2.0 * step;
      if (std::fabs(local.a) > edge || std::fabs(local.b) > edge)
        local.interior = false;
    }
    best = local;
    if (!best.interior) return best;
    cx = best.a;
    cy = best.b;
    half = 2.0 * step;
  }
  return best;
}

// Inner problem of the constrained fit at fixed theta = (a, b):
//   maximize sum_t log p_t  s.t.  A p = rhs, p > 0,
// with rows of A being 1, E_t, I_t, E_t I_t and rhs = (1, 1, alpha, alpha).
// Solved on the dual: p_t = 1/(A' nu)_t, Newton in nu (4 unknowns).
inline std::optional<double> constrained_inner_2pop(
    const std::vector<double>& values, double a, double b, double xi,
    double alpha) {
  const int n = int(values.size());
  Eigen::MatrixXd rows(4, n);
  for (int t = 0; t < n; ++t) {
    const double z = a + b * values[t];
    if (std::fabs(z) > 300.0) return std::nullopt;
    const double e = std::exp(z);
    const double ind = values[t] <= xi ? 1.0 : 0.0;
    rows(0, t) = 1.0;
    rows(1, t) = e;
    rows(2, t) = ind;
    rows(3, t) = e * ind;
  }
  Eigen::Vector4d rhs(1.0, 1.0, alpha, alpha);

  Eigen::Vector4d nu(double(n), 0.0, 0.0, 0.0);
  auto weights_of = [&](const Eigen::Vector4d& v) -> std::optional<Eigen::ArrayXd> {
    Eigen::ArrayXd denom = (rows.transpose() * v).array();
    if ((denom <= 0.0).any()) return std::nullopt;
    return denom.inverse();
  };

  auto p_opt = weights_of(nu);
  if (!p_opt) return std::nullopt;
  Eigen::ArrayXd p = *p_opt;
  Eigen::Vector4d h = rows * p.matrix() - rhs;
  for (int iter = 0; iter < 200; ++iter) {
    if (h.lpNorm<Eigen::Infinity>() < 1e-12) {
      return p.log().sum();
    }
    Eigen::Matrix4d jac =
        -rows * (rows.array().rowwise() * p.square().transpose())
                    .matrix()
                    .transpose();
    Eigen::Vector4d delta = jac.fullPivLu().solve(-h);
    if (!delta.allFinite()) return std::nullopt;
    double step = 1.0;
    bool ok = false;
    for (int hlv = 0; hlv < 50; ++hlv) {
      const Eigen::Vector4d cand = nu + step * delta;
      if (auto cp = weights_of(cand)) {
        Eigen::Vector4d ch = rows * cp->matrix() - rhs;
        if (ch.norm() < h.norm()) {
          nu = cand;
          p = *cp;
          h = ch;
          ok = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!ok) return std::nullopt;
  }
  return std::nullopt;
}

// Constrained composite log-EL at fixed theta, including the linear term.
inline std::optional<double> constrained_value_2pop(
    const std::vector<double>& values, const std::vector<int>& pop, double a,
    double b, double xi, double alpha) {
  const auto inner = constrained_inner_2pop(values, a, b, xi, alpha);
  if (!inner) return std::nullopt;
  double lin = 0.0;
  for (size_t t = 0; t < values.size(); ++t)
    if (pop[t] == 1) lin += a + b * values[t];
  return *inner + lin;
}

}  // namespace rotperm::testing

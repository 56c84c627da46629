#pragma once

#include <cstdint>
#include <vector>

#include "rotperm/panel.hpp"

namespace rotperm {

// Normal model: y_{k,i,u} = mu_k + sigma1*eta_i + sigma2*eta_{k,i}
//                          + sigma3*eps_{k,i,u}
// with eta_i shared by cluster i across occasions (longitudinal effect),
// eta_{k,i} shared within a cluster-occasion (cross-sectional effect).
struct NormalModelConfig {
  std::vector<double> means;  // one per occasion
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  double sigma3 = 2.0;
  PlanConfig plan;
  uint64_t seed = 0;
};

// Gamma model: y_{k,j} = lambda_k * (eps_j + eps_{k,j} + x_{k,j}) with
// eps_j ~ Gamma(gamma1), eps_{k,j} ~ Gamma(gamma2), x_{k,j,u} ~ Gamma(eta_k),
// all unit scale; lambda_k acts as a scale multiplier.
struct GammaModelConfig {
  double gamma1 = 2.0;
  double gamma2 = 1.5;
  std::vector<double> etas;     // shape per occasion
  std::vector<double> lambdas;  // scale per occasion
  PlanConfig plan;
  uint64_t seed = 0;
};

// Finite-population model: values are drawn from a fixed positive
// population with cluster-occasion-specific exponential tilting
// b_{k,j}(x) = exp(sigma1*eps_j + sigma2_k*eps_{k,j}*log x), then jittered
// by Gamma(lambda_shape, lambda_scale) multipliers.
struct NoNameModelConfig {
  std::vector<double> population;
  double sigma1 = 2.0;
  std::vector<double> sigma2s;  // one per occasion
  double lambda_shape = 20.0;
  double lambda_scale = 0.05;
  PlanConfig plan;
  uint64_t seed = 0;
};

RotatingPanelSample generate_normal(const NormalModelConfig& cfg);
RotatingPanelSample generate_gamma(const GammaModelConfig& cfg);
RotatingPanelSample generate_noname(const NoNameModelConfig& cfg);

}  // namespace rotperm

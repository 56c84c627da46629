#pragma once

namespace rotperm::special {

// Standard normal CDF.
double normal_cdf(double x);

// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

// Student-t CDF with nu degrees of freedom, lower tail.
double student_t_cdf(double t, double nu);

// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

// Chi-square upper tail P(X > x) with k degrees of freedom.
double chi_square_sf(double x, double k);

// Kolmogorov tail Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2);
// p-value of the two-sample KS statistic is Q(sqrt(ne) * D) with
// ne = n1*n2/(n1+n2).
double kolmogorov_q(double lambda);

// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
struct KsResult {
  double statistic;
  double p_value;
};
KsResult ks_two_sample(const double* a, int na, const double* b, int nb);

}  // namespace rotperm::special

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "rotperm/csv.hpp"
#include "rotperm/special.hpp"
#include "rotperm/stats.hpp"
#include "rotperm/synth.hpp"

using namespace rotperm;

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

bool samples_equal(const RotatingPanelSample& a, const RotatingPanelSample& b,
                   int occasions) {
  for (int k = 0; k < occasions; ++k) {
    if (a.members(k) != b.members(k)) return false;
    for (int id : a.members(k)) {
      const auto va = a.values(k, id);
      const auto vb = b.values(k, id);
      if (!std::equal(va.begin(), va.end(), vb.begin(), vb.end()))
        return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("normal generator: degenerate no-cluster case is IID N(8,1)") {
  NormalModelConfig cfg;
  cfg.plan = {5, 36, 6, 5, 6};
  cfg.means.assign(5, 8.0);
  cfg.sigma1 = 0.0;
  cfg.sigma2 = 0.0;
  cfg.sigma3 = 1.0;
  cfg.seed = 11;
  const auto sample = generate_normal(cfg);
  CHECK(validate(sample).empty());
  std::vector<double> all;
  for (int k = 0; k < 5; ++k) {
    const auto vals = sample.occasion_values(k);
    all.insert(all.end(), vals.begin(), vals.end());
  }
  REQUIRE(all.size() == 5u * 36u * 5u);
  CHECK(std::fabs(mean_of(all) - 8.0) < 3.0 / std::sqrt(double(all.size())));
}

TEST_CASE("normal generator: variance decomposition (1,1,2)") {
  // Large cross-section of clusters; two occasions so the longitudinal
  // covariance is estimable.
  const int n = 100000;
  NormalModelConfig cfg;
  cfg.plan = {2, n, n / 2, 2, 2};
  cfg.means = {8.0, 8.0};
  cfg.sigma1 = 1.0;
  cfg.sigma2 = 1.0;
  cfg.sigma3 = 2.0;
  cfg.seed = 12;
  const auto sample = generate_normal(cfg);

  // Marginal variance = 1 + 1 + 4 = 6 on occasion 0.
  const auto occ0 = sample.occasion_values(0);
  const double m0 = mean_of(occ0);
  double var = 0.0;
  for (double v : occ0) var += (v - m0) * (v - m0);
  var /= double(occ0.size() - 1);
  const double var_se = 6.0 * std::sqrt(2.0 / double(occ0.size() - 1));
  CHECK(std::fabs(var - 6.0) < 3.0 * var_se);

  // Within cluster-occasion covariance = sigma1^2 + sigma2^2 = 2.
  double cov_within = 0.0;
  for (int id : sample.members(0)) {
    const auto v = sample.values(0, id);
    cov_within += (v[0] - m0) * (v[1] - m0);
  }
  cov_within /= double(n - 1);
  const double cw_se = std::sqrt((6.0 * 6.0 + 2.0 * 2.0) / double(n));
  CHECK(std::fabs(cov_within - 2.0) < 3.0 * cw_se);

  // Cross-occasion same-cluster covariance = sigma1^2 = 1.
  const auto both = overlap_sets(sample, 0, 1).both;
  const auto occ1 = sample.occasion_values(1);
  const double m1 = mean_of(occ1);
  double cov_long = 0.0;
  for (int id : both)
    cov_long += (sample.values(0, id)[0] - m0) * (sample.values(1, id)[0] - m1);
  cov_long /= double(both.size() - 1);
  const double cl_se = std::sqrt((6.0 * 6.0 + 1.0) / double(both.size()));
  CHECK(std::fabs(cov_long - 1.0) < 3.0 * cl_se);
}

TEST_CASE("normal generator: determinism and prefix stability") {
  NormalModelConfig cfg;
  cfg.plan = {5, 12, 2, 3, 6};
  cfg.means = {8, 8.2, 7.9, 8.1, 8};
  cfg.seed = 13;
  const auto a = generate_normal(cfg);
  const auto b = generate_normal(cfg);
  CHECK(samples_equal(a, b, 5));

  NormalModelConfig truncated = cfg;
  truncated.plan.num_occasions = 2;
  truncated.means = {8, 8.2};
  const auto c = generate_normal(truncated);
  CHECK(samples_equal(a, c, 2));
}

TEST_CASE("gamma generator: marginal moments and scale interpretation") {
  const int n = 50000;
  GammaModelConfig cfg;
  cfg.plan = {2, n, n / 2, 2, 2};
  cfg.gamma1 = 2.0;
  cfg.gamma2 = 1.5;
  cfg.etas = {8.0, 7.0};
  cfg.lambdas = {1.0, 1.3};
  cfg.seed = 14;
  const auto sample = generate_gamma(cfg);
  CHECK(validate(sample).empty());

  for (int k = 0; k < 2; ++k) {
    const auto vals = sample.occasion_values(k);
    const double shape = cfg.gamma1 + cfg.gamma2 + cfg.etas[k];
    const double want_mean = cfg.lambdas[k] * shape;
    const double want_var =
        cfg.lambdas[k] * cfg.lambdas[k] * shape;  // sum of indep gammas
    const double got = mean_of(vals);
    CHECK(std::fabs(got - want_mean) <
          3.0 * std::sqrt(want_var / double(vals.size())) * 2.0);
  }
}

TEST_CASE("gamma generator: vanishing gamma1 kills longitudinal correlation") {
  const int n = 100000;
  GammaModelConfig cfg;
  cfg.plan = {2, n, n / 2, 1, 2};
  cfg.gamma1 = 1e-8;
  cfg.gamma2 = 1.5;
  cfg.etas = {8.0, 8.0};
  cfg.lambdas = {1.0, 1.0};
  cfg.seed = 15;
  const auto sample = generate_gamma(cfg);
  const auto both = overlap_sets(sample, 0, 1).both;
  std::vector<double> x, y;
  for (int id : both) {
    x.push_back(sample.values(0, id)[0]);
    y.push_back(sample.values(1, id)[0]);
  }
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double rho = sxy / std::sqrt(sxx * syy);
  CHECK(std::fabs(rho) < 0.01);
}

TEST_CASE("gamma generator: determinism") {
  GammaModelConfig cfg;
  cfg.plan = {3, 6, 2, 2, 3};
  cfg.etas = {8, 8, 8};
  cfg.lambdas = {1, 1, 1};
  cfg.seed = 16;
  CHECK(samples_equal(generate_gamma(cfg), generate_gamma(cfg), 3));
}

TEST_CASE("noname generator: zero tilts draw uniformly from the population") {
  // Geometrically spaced population so each draw can be mapped back to its
  // index despite the Gamma multiplier (made nearly degenerate at 1 here).
  const int pop_size = 825;
  std::vector<double> population(pop_size);
  for (int i = 0; i < pop_size; ++i) population[i] = std::pow(1.002, i);

  const int n = 10000;
  NoNameModelConfig cfg;
  cfg.population = population;
  cfg.plan = {2, n, n / 2, 5, 2};
  cfg.sigma1 = 0.0;
  cfg.sigma2s = {0.0, 0.0};
  cfg.lambda_shape = 1e9;  // Gamma(1e9, 1e-9) concentrates at 1
  cfg.lambda_scale = 1e-9;
  cfg.seed = 17;
  const auto sample = generate_noname(cfg);

  std::vector<long long> counts(pop_size, 0);
  long long total = 0;
  for (int k = 0; k < 2; ++k)
    for (double v : sample.occasion_values(k)) {
      const long idx = std::lround(std::log(v) / std::log(1.002));
      REQUIRE(idx >= 0);
      REQUIRE(idx < pop_size);
      REQUIRE(std::fabs(v / population[idx] - 1.0) < 1e-3);
      counts[idx] += 1;
      ++total;
    }
  REQUIRE(total == 2LL * n * 5);
  const double expected = double(total) / double(pop_size);
  double chi2 = 0.0;
  for (const auto c : counts)
    chi2 += (double(c) - expected) * (double(c) - expected) / expected;
  const double pval = special::chi_square_sf(chi2, double(pop_size - 1));
  CHECK(pval > 0.001);
}

TEST_CASE("noname generator: multiplier moments via unit population") {
  NoNameModelConfig cfg;
  cfg.population = {1.0};
  cfg.plan = {2, 20000, 10000, 5, 2};
  cfg.sigma1 = 2.0;
  cfg.sigma2s = {6.0, 6.0};
  cfg.seed = 18;
  const auto sample = generate_noname(cfg);
  std::vector<double> lambdas;
  for (int k = 0; k < 2; ++k) {
    const auto vals = sample.occasion_values(k);
    lambdas.insert(lambdas.end(), vals.begin(), vals.end());
  }
  const double m = mean_of(lambdas);
  double var = 0.0;
  for (double v : lambdas) var += (v - m) * (v - m);
  var /= double(lambdas.size() - 1);
  CHECK(std::fabs(m - 1.0) <
        3.0 * std::sqrt(0.05 / double(lambdas.size())));
  CHECK(std::fabs(var - 0.05) < 0.003);
}

TEST_CASE("noname generator: larger sigma2 inflates draws stochastically") {
  const auto population =
      load_population(std::string(ROTPERM_DATA_DIR) + "/mor_population.txt");
  NoNameModelConfig lo;
  lo.population = population;
  lo.plan = {2, 10000, 5000, 5, 2};
  lo.sigma1 = 2.0;
  lo.sigma2s = {3.0, 3.0};
  lo.seed = 19;
  NoNameModelConfig hi = lo;
  hi.sigma2s = {6.0, 6.0};
  const auto sample_lo = generate_noname(lo);
  const auto sample_hi = generate_noname(hi);
  const double med_lo = empirical_quantile(sample_lo.occasion_values(0), 0.5);
  const double med_hi = empirical_quantile(sample_hi.occasion_values(0), 0.5);
  CHECK(med_hi > med_lo);
}

TEST_CASE("generated samples validate and symmetric statistics ignore unit order") {
  NormalModelConfig cfg;
  cfg.plan = {5, 36, 6, 5, 6};
  cfg.means.assign(5, 8.0);
  cfg.seed = 20;
  const auto sample = generate_normal(cfg);
  CHECK(validate(sample).empty());

  // Reverse unit order within every cluster on occasions 0/1.
  SampleEditor editor(sample);
  for (int k = 0; k < 2; ++k)
    for (int id : sample.members(k)) {
      auto v = sample.values(k, id);
      std::vector<double> rev(v.rbegin(), v.rend());
      editor.set_values(k, id, std::move(rev));
    }
  const auto permuted = std::move(editor).build();
  const auto view_a = make_view(sample);
  const auto view_b = make_view(permuted);
  CHECK(t_statistic(view_a) == doctest::Approx(t_statistic(view_b)).epsilon(1e-12));
  CHECK(wilcoxon_statistic(view_a) == wilcoxon_statistic(view_b));
  CHECK(em_statistic(view_a, 0.3) == em_statistic(view_b, 0.3));
}

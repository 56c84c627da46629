#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "rotperm/errors.hpp"
#include "rotperm/rng.hpp"
#include "rotperm/stats.hpp"

using namespace rotperm;

namespace {

TwoSampleView view_of(std::vector<double> s0, std::vector<double> s1) {
  TwoSampleView v;
  v.sample0 = std::move(s0);
  v.sample1 = std::move(s1);
  v.labels0.assign(v.sample0.size(), 0);
  v.labels1.assign(v.sample1.size(), 1);
  return v;
}

// Textbook two-sample pooled t, written independently of the library path.
double t_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  const int n0 = int(a.size()), n1 = int(b.size());
  double m0 = 0, m1 = 0;
  for (double v : a) m0 += v;
  for (double v : b) m1 += v;
  m0 /= n0;
  m1 /= n1;
  double ss = 0;
  for (double v : a) ss += (v - m0) * (v - m0);
  for (double v : b) ss += (v - m1) * (v - m1);
  const double s2 = ss / (n0 + n1 - 2);
  return (m1 - m0) / std::sqrt(s2 * (1.0 / n0 + 1.0 / n1));
}

// Quadratic-time Wilcoxon with the half-tie rule; the production path is
// sort-and-merge.
double wilcoxon_bruteforce(const std::vector<double>& s0,
                           const std::vector<double>& s1) {
  double count = 0.0;
  for (double y1 : s1)
    for (double y0 : s0) {
      if (y1 > y0)
        count += 1.0;
      else if (y1 == y0)
        count += 0.5;
    }
  return count;
}

// inf{y : Fhat(y) >= level} by direct scan.
double quantile_bruteforce(std::vector<double> values, double level) {
  std::sort(values.begin(), values.end());
  const double n = double(values.size());
  for (size_t j = 0; j < values.size(); ++j) {
    double cdf = double(j + 1) / n;
    if (cdf >= level - 1e-12) return values[j];
  }
  return values.back();
}

}  // namespace

TEST_CASE("t statistic: worked examples") {
  CHECK(t_statistic(view_of({1, 2, 3}, {1, 2, 3})) == doctest::Approx(0.0));
  CHECK(t_statistic(view_of({1, 2, 3}, {2, 3, 4})) ==
        doctest::Approx(std::sqrt(1.5)).epsilon(1e-12));
  CHECK_THROWS_AS(t_statistic(view_of({5, 5, 5}, {5, 5})), StatisticError);
}

TEST_CASE("t statistic matches the textbook routine and is antisymmetric") {
  RandomStream rng(100, StreamRole::probe, 0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> a(5 + rng.next_below(20));
    std::vector<double> b(5 + rng.next_below(20));
    for (auto& v : a) v = rng.next_normal();
    for (auto& v : b) v = 0.3 + rng.next_normal();
    const auto v01 = view_of(a, b);
    const auto v10 = view_of(b, a);
    CHECK(t_statistic(v01) == doctest::Approx(t_oracle(a, b)).epsilon(1e-12));
    CHECK(t_statistic(v01) ==
          doctest::Approx(-t_statistic(v10)).epsilon(1e-12));
  }
}

TEST_CASE("wilcoxon: worked examples with ties at half weight") {
  CHECK(wilcoxon_statistic(view_of({1, 2}, {3, 4})) == 4.0);
  CHECK(wilcoxon_statistic(view_of({1, 3}, {2, 2})) == 2.0);
  CHECK(wilcoxon_statistic(view_of({5, 5}, {5, 5})) == 2.0);
}

TEST_CASE("wilcoxon: sort-merge equals brute force exactly on tied data") {
  RandomStream rng(101, StreamRole::probe, 0);
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> a(1 + rng.next_below(30));
    std::vector<double> b(1 + rng.next_below(30));
    // Values on a small integer lattice so ties are common.
    for (auto& v : a) v = double(rng.next_below(8));
    for (auto& v : b) v = double(rng.next_below(8));
    const double fast = wilcoxon_statistic(view_of(a, b));
    const double slow = wilcoxon_bruteforce(a, b);
    REQUIRE(fast == slow);  // exact: both are sums of 0/0.5/1
    // Swap identity: W(a,b) + W(b,a) = n0*n1 exactly.
    const double swapped = wilcoxon_statistic(view_of(b, a));
    REQUIRE(fast + swapped == double(a.size() * b.size()));
  }
}

TEST_CASE("empirical quantile: worked examples") {
  std::vector<double> hundred(100);
  for (int i = 0; i < 100; ++i) hundred[i] = 100 - i;  // a permutation
  CHECK(empirical_quantile(hundred, 0.05) == 5.0);
  CHECK(empirical_quantile({3, 1, 2}, 0.5) == 2.0);
  CHECK(empirical_quantile({1, 2, 3, 4}, 0.5) == 2.0);
  CHECK_THROWS_AS(empirical_quantile({}, 0.5), StatisticError);
}

TEST_CASE("empirical quantile: brute-force scan, monotonicity, equivariance") {
  RandomStream rng(102, StreamRole::probe, 0);
  for (int rep = 0; rep < 300; ++rep) {
    std::vector<double> v(1 + rng.next_below(40));
    for (auto& x : v) x = double(rng.next_below(10)) * 0.5;
    const double level1 = 0.05 + 0.9 * rng.next_double();
    const double level2 = std::min(0.999, level1 + 0.3 * rng.next_double());
    const double q1 = empirical_quantile(v, level1);
    CHECK(q1 == quantile_bruteforce(v, level1));
    CHECK(empirical_quantile(v, level2) >= q1);
    // Equivariance under the strictly increasing map 2x + 1.
    std::vector<double> w(v.size());
    std::transform(v.begin(), v.end(), w.begin(),
                   [](double x) { return 2.0 * x + 1.0; });
    CHECK(empirical_quantile(w, level1) == doctest::Approx(2.0 * q1 + 1.0));
  }
}

TEST_CASE("em statistic: worked examples") {
  std::vector<double> base(100);
  for (int i = 0; i < 100; ++i) base[i] = i + 1;
  std::vector<double> shifted(100), interleaved(100);
  for (int i = 0; i < 100; ++i) {
    shifted[i] = base[i] + 1.0;
    interleaved[i] = i + 0.5;
  }
  CHECK(em_statistic(view_of(base, base), 0.37) == 0.0);
  CHECK(em_statistic(view_of(base, shifted), 0.05) == 1.0);
  CHECK(em_statistic(view_of(base, shifted), 0.5) == 1.0);
  CHECK(em_statistic(view_of(base, interleaved), 0.05) ==
        doctest::Approx(-0.5));
}

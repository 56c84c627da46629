#include "rotperm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rotperm/errors.hpp"

namespace rotperm {

TwoSampleView make_view(const RotatingPanelSample& sample, int k1, int k2) {
  TwoSampleView view;
  for (int id : sample.members(k1)) {
    if (!sample.has_observation(k1, id)) continue;
    for (double v : sample.values(k1, id)) {
      view.sample0.push_back(v);
      view.labels0.push_back(id);
    }
  }
  for (int id : sample.members(k2)) {
    if (!sample.has_observation(k2, id)) continue;
    for (double v : sample.values(k2, id)) {
      view.sample1.push_back(v);
      view.labels1.push_back(id);
    }
  }
  return view;
}

double t_statistic(const TwoSampleView& view) {
  const int n0 = view.n0();
  const int n1 = view.n1();
  if (n0 < 2 || n1 < 2)
    throw StatisticError("t statistic needs at least two values per sample");
  const double mean0 =
      std::accumulate(view.sample0.begin(), view.sample0.end(), 0.0) / n0;
  const double mean1 =
      std::accumulate(view.sample1.begin(), view.sample1.end(), 0.0) / n1;
  double ss = 0.0;
  for (double v : view.sample0) ss += (v - mean0) * (v - mean0);
  for (double v : view.sample1) ss += (v - mean1) * (v - mean1);
  const double pooled = ss / (n0 + n1 - 2);
  if (!(pooled > 0.0)) throw StatisticError("degenerate sample");
  return (mean1 - mean0) / std::sqrt((1.0 / n0 + 1.0 / n1) * pooled);
}

double wilcoxon_statistic(const TwoSampleView& view) {
  std::vector<double> s0 = view.sample0;
  std::sort(s0.begin(), s0.end());
  double count = 0.0;
  for (double y : view.sample1) {
    const auto lo = std::lower_bound(s0.begin(), s0.end(), y);
    const auto hi = std::upper_bound(lo, s0.end(), y);
    count += double(lo - s0.begin()) + 0.5 * double(hi - lo);
  }
  return count;
}

double empirical_quantile(std::vector<double> values, double level) {
  if (values.empty()) throw StatisticError("quantile of empty sample");
  const double n = double(values.size());
  // Small backoff so exact multiples of 1/n are not pushed up a rank by
  // floating-point noise in level * n.
  size_t j = size_t(std::ceil(level * n - 1e-9));
  j = std::min(std::max<size_t>(j, 1), values.size());
  std::nth_element(values.begin(), values.begin() + (j - 1), values.end());
  return values[j - 1];
}

double em_statistic(const TwoSampleView& view, double level) {
  return empirical_quantile(view.sample1, level) -
         empirical_quantile(view.sample0, level);
}

}  // namespace rotperm

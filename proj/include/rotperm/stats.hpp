#pragma once

#include <vector>

#include "rotperm/panel.hpp"

namespace rotperm {

// Flattened view of the first two occasions of a panel, with cluster labels
// retained. All statistics here ignore the cluster structure; the labels
// only document where each value came from.
struct TwoSampleView {
  std::vector<double> sample0;
  std::vector<double> sample1;
  std::vector<int> labels0;
  std::vector<int> labels1;

  int n0() const { return int(sample0.size()); }
  int n1() const { return int(sample1.size()); }
};

// View of occasions (k1, k2); defaults to (0, 1).
TwoSampleView make_view(const RotatingPanelSample& sample, int k1 = 0,
                        int k2 = 1);

// Two-sample t statistic with pooled (cluster-blind) variance:
// (mean1 - mean0) / sqrt((1/n0 + 1/n1) s^2). Throws StatisticError when the
// pooled variance vanishes.
double t_statistic(const TwoSampleView& view);

// Rank-sum count sum_{pairs} 1(y1 > y0), ties counted 1/2, computed by
// sort-and-merge in O((n0+n1) log(n0+n1)). Unnormalized.
double wilcoxon_statistic(const TwoSampleView& view);

// Left-continuous (type 1) empirical quantile: smallest order statistic
// x_(j) with j >= ceil(level * count).
double empirical_quantile(std::vector<double> values, double level);

// Difference of empirical quantiles xi(sample1) - xi(sample0). Small values
// support the alternative that the second population has a lower quantile.
double em_statistic(const TwoSampleView& view, double level);

}  // namespace rotperm

#pragma once

#include <functional>
#include <vector>

#include "rotperm/panel.hpp"

namespace rotperm::testing {

// Canonical-rotation sample with values supplied per (occasion, cluster,
// unit).
inline RotatingPanelSample make_sample(
    const PlanConfig& plan,
    const std::function<double(int, int, int)>& value) {
  auto membership = canonical_membership(plan);
  std::vector<ClusterObservation> obs;
  for (int k = 0; k < plan.num_occasions; ++k)
    for (int id : membership[k]) {
      ClusterObservation o{k, id, {}};
      o.values.reserve(plan.cluster_size);
      for (int u = 0; u < plan.cluster_size; ++u)
        o.values.push_back(value(k, id, u));
      obs.push_back(std::move(o));
    }
  return RotatingPanelSample(plan, std::move(membership), std::move(obs));
}

// Two-occasion sample carrying explicit value vectors, for tiny DRM
// instances. Both occasions must have n*r values.
inline RotatingPanelSample make_two_occasion(
    int clusters, int cluster_size, const std::vector<double>& occ0,
    const std::vector<double>& occ1) {
  PlanConfig plan{2, clusters, clusters, cluster_size, 1};
  auto membership = canonical_membership(plan);
  std::vector<ClusterObservation> obs;
  for (int k = 0; k < 2; ++k) {
    const auto& vals = k == 0 ? occ0 : occ1;
    for (int j = 0; j < clusters; ++j) {
      ClusterObservation o{k, membership[k][j], {}};
      for (int u = 0; u < cluster_size; ++u)
        o.values.push_back(vals[j * cluster_size + u]);
      obs.push_back(std::move(o));
    }
  }
  return RotatingPanelSample(plan, std::move(membership), std::move(obs));
}

}  // namespace rotperm::testing

#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace rotperm {

// Geometry of a rotating sampling plan: on each of num_occasions occasions
// n clusters are observed, m of which are replaced before the next
// occasion, so the panel is fully refreshed after full_rotation occasions.
struct PlanConfig {
  int num_occasions = 0;         // K + 1
  int clusters_per_occasion = 0; // n
  int replaced_per_occasion = 0; // m
  int cluster_size = 0;          // r
  int full_rotation = 0;         // N, with n == m * N

  int last_occasion() const { return num_occasions - 1; }
  // Checks the arithmetic invariants; returns a message per violation.
  std::vector<std::string> check() const;
};

// All values observed in one cluster on one occasion.
struct ClusterObservation {
  int occasion = 0;
  int cluster_id = 0;
  std::vector<double> values;
};

struct Violation {
  std::string code;     // membership_size | overlap | missing_observation |
                        // observation_size | nonfinite_value |
                        // duplicate_member | plan
  int occasion = -1;    // first occasion involved, -1 if none
  int occasion2 = -1;   // second occasion for overlap violations
  int cluster_id = -1;  // offending cluster, -1 if none
  std::string message;
};

// A multi-occasion clustered dataset. Membership sets are explicit so that
// datasets with dropouts remain representable; validity is checked by
// validate(), not enforced at construction.
//
// Immutable after construction.
class RotatingPanelSample {
 public:
  RotatingPanelSample(PlanConfig plan,
                      std::vector<std::vector<int>> membership,
                      std::vector<ClusterObservation> observations);

  const PlanConfig& plan() const { return plan_; }
  int num_occasions() const { return int(membership_.size()); }

  // Ordered cluster ids present on occasion k.
  const std::vector<int>& members(int k) const;

  bool has_observation(int k, int cluster_id) const;
  // Values for cluster `cluster_id` on occasion k; throws if absent.
  std::span<const double> values(int k, int cluster_id) const;
  // Values for the cluster in membership slot `slot` on occasion k.
  std::span<const double> values_at_slot(int k, int slot) const;

  // All values on occasion k flattened in membership order.
  std::vector<double> occasion_values(int k) const;
  int total_observations() const;

  std::vector<ClusterObservation> all_observations() const;

 private:
  friend class SampleEditor;
  PlanConfig plan_;
  std::vector<std::vector<int>> membership_;
  // Per occasion, value vectors aligned with membership order; empty vector
  // marks a missing observation.
  std::vector<std::vector<std::vector<double>>> data_;
  std::vector<std::unordered_map<int, int>> slot_of_;
};

// Canonical rotation membership: s_k = {k*m + 1, ..., k*m + n}.
std::vector<std::vector<int>> canonical_membership(const PlanConfig& plan);

// Reports every violated invariant; empty means valid. Never throws.
std::vector<Violation> validate(const RotatingPanelSample& sample);

struct OverlapSets {
  std::vector<int> both;
  std::vector<int> only_first;
  std::vector<int> only_second;
};

// Partition of s_{k1} and s_{k2} into shared and exclusive cluster ids.
OverlapSets overlap_sets(const RotatingPanelSample& sample, int k1, int k2);

// Mutation helper used by the permutation step; produces a new sample and
// leaves the source untouched.
class SampleEditor {
 public:
  explicit SampleEditor(const RotatingPanelSample& sample);
  void set_values(int k, int cluster_id, std::vector<double> values);
  RotatingPanelSample build() &&;

 private:
  RotatingPanelSample work_;
};

}  // namespace rotperm

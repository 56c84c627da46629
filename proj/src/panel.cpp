#include "rotperm/panel.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "rotperm/errors.hpp"

namespace rotperm {

std::vector<std::string> PlanConfig::check() const {
  std::vector<std::string> problems;
  if (num_occasions < 2) problems.push_back("num_occasions must be >= 2");
  if (replaced_per_occasion < 1)
    problems.push_back("replaced_per_occasion must be >= 1");
  if (cluster_size < 1) problems.push_back("cluster_size must be >= 1");
  if (clusters_per_occasion < 1)
    problems.push_back("clusters_per_occasion must be >= 1");
  if (clusters_per_occasion != replaced_per_occasion * full_rotation)
    problems.push_back("clusters_per_occasion must equal "
                       "replaced_per_occasion * full_rotation");
  return problems;
}

RotatingPanelSample::RotatingPanelSample(
    PlanConfig plan, std::vector<std::vector<int>> membership,
    std::vector<ClusterObservation> observations)
    : plan_(plan), membership_(std::move(membership)) {
  data_.resize(membership_.size());
  slot_of_.resize(membership_.size());
  for (size_t k = 0; k < membership_.size(); ++k) {
    data_[k].resize(membership_[k].size());
    for (size_t s = 0; s < membership_[k].size(); ++s)
      slot_of_[k].emplace(membership_[k][s], int(s));
  }
  for (auto& obs : observations) {
    if (obs.occasion < 0 || obs.occasion >= int(membership_.size())) continue;
    auto it = slot_of_[obs.occasion].find(obs.cluster_id);
    if (it == slot_of_[obs.occasion].end()) continue;
    data_[obs.occasion][it->second] = std::move(obs.values);
  }
}

const std::vector<int>& RotatingPanelSample::members(int k) const {
  if (k < 0 || k >= num_occasions())
    throw std::out_of_range("occasion index out of range");
  return membership_[k];
}

bool RotatingPanelSample::has_observation(int k, int cluster_id) const {
  if (k < 0 || k >= num_occasions()) return false;
  auto it = slot_of_[k].find(cluster_id);
  return it != slot_of_[k].end() && !data_[k][it->second].empty();
}

std::span<const double> RotatingPanelSample::values(int k,
                                                    int cluster_id) const {
  if (k < 0 || k >= num_occasions())
    throw std::out_of_range("occasion index out of range");
  auto it = slot_of_[k].find(cluster_id);
  if (it == slot_of_[k].end() || data_[k][it->second].empty())
    throw std::out_of_range("no observation for (occasion, cluster)");
  return data_[k][it->second];
}

std::span<const double> RotatingPanelSample::values_at_slot(int k,
                                                            int slot) const {
  return data_.at(k).at(slot);
}

std::vector<double> RotatingPanelSample::occasion_values(int k) const {
  if (k < 0 || k >= num_occasions())
    throw std::out_of_range("occasion index out of range");
  std::vector<double> out;
  out.reserve(membership_[k].size() * size_t(plan_.cluster_size));
  for (const auto& v : data_[k]) out.insert(out.end(), v.begin(), v.end());
  return out;
}

int RotatingPanelSample::total_observations() const {
  int total = 0;
  for (const auto& occ : data_)
    for (const auto& v : occ) total += int(v.size());
  return total;
}

std::vector<ClusterObservation> RotatingPanelSample::all_observations() const {
  std::vector<ClusterObservation> out;
  for (int k = 0; k < num_occasions(); ++k)
    for (size_t s = 0; s < membership_[k].size(); ++s)
      if (!data_[k][s].empty())
        out.push_back({k, membership_[k][s], data_[k][s]});
  return out;
}

std::vector<std::vector<int>> canonical_membership(const PlanConfig& plan) {
  std::vector<std::vector<int>> membership(plan.num_occasions);
  for (int k = 0; k < plan.num_occasions; ++k) {
    membership[k].resize(plan.clusters_per_occasion);
    for (int j = 0; j < plan.clusters_per_occasion; ++j)
      membership[k][j] = k * plan.replaced_per_occasion + j + 1;
  }
  return membership;
}

std::vector<Violation> validate(const RotatingPanelSample& sample) {
  std::vector<Violation> out;
  const PlanConfig& plan = sample.plan();
  for (const auto& msg : plan.check())
    out.push_back({"plan", -1, -1, -1, msg});
  if (sample.num_occasions() != plan.num_occasions)
    out.push_back({"plan", -1, -1, -1,
                   "membership has " + std::to_string(sample.num_occasions()) +
                       " occasions, plan declares " +
                       std::to_string(plan.num_occasions)});

  for (int k = 0; k < sample.num_occasions(); ++k) {
    const auto& mem = sample.members(k);
    std::set<int> seen;
    for (int id : mem)
      if (!seen.insert(id).second)
        out.push_back({"duplicate_member", k, -1, id,
                       "cluster listed twice on occasion " +
                           std::to_string(k)});
    if (int(mem.size()) != plan.clusters_per_occasion)
      out.push_back({"membership_size", k, -1, -1,
                     "occasion " + std::to_string(k) + " has " +
                         std::to_string(mem.size()) + " clusters, expected " +
                         std::to_string(plan.clusters_per_occasion)});
    for (int id : mem) {
      if (!sample.has_observation(k, id)) {
        out.push_back({"missing_observation", k, -1, id,
                       "no observation for cluster " + std::to_string(id) +
                           " on occasion " + std::to_string(k)});
        continue;
      }
      const auto vals = sample.values(k, id);
      if (int(vals.size()) != plan.cluster_size)
        out.push_back({"observation_size", k, -1, id,
                       "cluster " + std::to_string(id) + " on occasion " +
                           std::to_string(k) + " has " +
                           std::to_string(vals.size()) + " values, expected " +
                           std::to_string(plan.cluster_size)});
      for (double v : vals)
        if (!std::isfinite(v)) {
          out.push_back({"nonfinite_value", k, -1, id,
                         "nonfinite value in cluster " + std::to_string(id) +
                             " on occasion " + std::to_string(k)});
          break;
        }
    }
  }

  for (int k = 0; k + 1 < sample.num_occasions(); ++k) {
    std::set<int> a(sample.members(k).begin(), sample.members(k).end());
    int shared = 0;
    for (int id : sample.members(k + 1)) shared += a.count(id);
    const int expected = plan.clusters_per_occasion - plan.replaced_per_occasion;
    if (shared != expected)
      out.push_back({"overlap", k, k + 1, -1,
                     "occasions " + std::to_string(k) + "," +
                         std::to_string(k + 1) + " share " +
                         std::to_string(shared) + " clusters, expected " +
                         std::to_string(expected)});
  }
  return out;
}

OverlapSets overlap_sets(const RotatingPanelSample& sample, int k1, int k2) {
  if (k1 == k2) throw std::invalid_argument("overlap_sets: k1 == k2");
  if (k1 < 0 || k1 >= sample.num_occasions() || k2 < 0 ||
      k2 >= sample.num_occasions())
    throw std::out_of_range("overlap_sets: occasion index out of range");
  std::set<int> a(sample.members(k1).begin(), sample.members(k1).end());
  std::set<int> b(sample.members(k2).begin(), sample.members(k2).end());
  OverlapSets out;
  for (int id : a)
    (b.count(id) ? out.both : out.only_first).push_back(id);
  for (int id : b)
    if (!a.count(id)) out.only_second.push_back(id);
  return out;
}

SampleEditor::SampleEditor(const RotatingPanelSample& sample) : work_(sample) {}

void SampleEditor::set_values(int k, int cluster_id,
                              std::vector<double> values) {
  auto it = work_.slot_of_.at(k).find(cluster_id);
  if (it == work_.slot_of_.at(k).end())
    throw std::out_of_range("set_values: cluster not on occasion");
  work_.data_[k][it->second] = std::move(values);
}

RotatingPanelSample SampleEditor::build() && { return std::move(work_); }

}  // namespace rotperm

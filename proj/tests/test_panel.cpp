#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "rotperm/panel.hpp"

using namespace rotperm;
using rotperm::testing::make_sample;

namespace {

const PlanConfig kPlan{5, 36, 6, 5, 6};

RotatingPanelSample canonical_sample() {
  return make_sample(kPlan, [](int k, int id, int u) {
    return k * 1000.0 + id + 0.01 * u;
  });
}

}  // namespace

TEST_CASE("plan arithmetic is checked") {
  CHECK(kPlan.check().empty());
  PlanConfig bad = kPlan;
  bad.full_rotation = 5;  // 36 != 6*5
  CHECK(!bad.check().empty());
  bad = kPlan;
  bad.num_occasions = 1;
  CHECK(!bad.check().empty());
}

TEST_CASE("well-formed canonical sample validates cleanly") {
  const auto sample = canonical_sample();
  CHECK(validate(sample).empty());
  // idempotent, side-effect free
  CHECK(validate(sample).empty());
  CHECK(sample.total_observations() == 5 * 36 * 5);
}

TEST_CASE("a deleted observation is reported with its indices") {
  auto membership = canonical_membership(kPlan);
  std::vector<ClusterObservation> obs;
  const int missing_id = membership[2][4];
  for (int k = 0; k < kPlan.num_occasions; ++k)
    for (int id : membership[k]) {
      if (k == 2 && id == missing_id) continue;
      obs.push_back({k, id, std::vector<double>(kPlan.cluster_size, 1.0)});
    }
  const RotatingPanelSample sample(kPlan, std::move(membership),
                                   std::move(obs));
  const auto report = validate(sample);
  REQUIRE(report.size() == 1);
  CHECK(report[0].code == "missing_observation");
  CHECK(report[0].occasion == 2);
  CHECK(report[0].cluster_id == missing_id);
}

TEST_CASE("wrong rotation overlap is reported for the pair") {
  auto membership = canonical_membership(kPlan);
  // Make s_1 share one extra cluster with s_0: replace the newest cluster
  // by one that already left.
  membership[1].back() = membership[0].front();
  std::vector<ClusterObservation> obs;
  for (int k = 0; k < kPlan.num_occasions; ++k)
    for (int id : membership[k])
      obs.push_back({k, id, std::vector<double>(kPlan.cluster_size, 2.0)});
  const RotatingPanelSample sample(kPlan, std::move(membership),
                                   std::move(obs));
  const auto report = validate(sample);
  bool found = false;
  for (const auto& v : report)
    if (v.code == "overlap" && v.occasion == 0 && v.occasion2 == 1)
      found = true;
  CHECK(found);
}

TEST_CASE("unequal cluster size and nonfinite values are rejected") {
  auto membership = canonical_membership(kPlan);
  std::vector<ClusterObservation> obs;
  for (int k = 0; k < kPlan.num_occasions; ++k)
    for (int id : membership[k])
      obs.push_back({k, id, std::vector<double>(kPlan.cluster_size, 2.0)});
  obs[0].values.pop_back();
  obs[1].values[0] = std::nan("");
  const RotatingPanelSample sample(kPlan, std::move(membership),
                                   std::move(obs));
  const auto report = validate(sample);
  int size_violations = 0, nan_violations = 0;
  for (const auto& v : report) {
    size_violations += v.code == "observation_size";
    nan_violations += v.code == "nonfinite_value";
  }
  CHECK(size_violations == 1);
  CHECK(nan_violations == 1);
}

TEST_CASE("overlap sets on the canonical rotation") {
  const auto sample = canonical_sample();
  const auto sets = overlap_sets(sample, 0, 1);
  CHECK(sets.both.size() == 30);
  CHECK(sets.only_first.size() == 6);
  CHECK(sets.only_second.size() == 6);

  // The three sets partition s_0 ∪ s_1.
  std::set<int> all(sets.both.begin(), sets.both.end());
  all.insert(sets.only_first.begin(), sets.only_first.end());
  all.insert(sets.only_second.begin(), sets.only_second.end());
  CHECK(all.size() == 42);

  CHECK_THROWS_AS(overlap_sets(sample, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(overlap_sets(sample, 0, 9), std::out_of_range);
}

TEST_CASE("distant occasions overlap by n - m|k1-k2|") {
  const PlanConfig plan{7, 36, 6, 5, 6};
  const auto sample =
      make_sample(plan, [](int, int id, int) { return double(id); });
  CHECK(overlap_sets(sample, 0, 5).both.size() == 6);
  CHECK(overlap_sets(sample, 0, 6).both.size() == 0);
  for (int k1 = 0; k1 < plan.num_occasions; ++k1)
    for (int k2 = 0; k2 < plan.num_occasions; ++k2) {
      if (k1 == k2) continue;
      const int expected = std::max(0, 36 - 6 * std::abs(k1 - k2));
      CHECK(int(overlap_sets(sample, k1, k2).both.size()) == expected);
    }
}

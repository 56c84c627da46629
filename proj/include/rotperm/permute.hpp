#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rotperm/basis.hpp"
#include "rotperm/drm.hpp"
#include "rotperm/panel.hpp"
#include "rotperm/rng.hpp"

namespace rotperm {

enum class StatKind { T, W, EM, EL, ELR };

// Which tail of the permutation distribution rejects. Under the one-sided
// alternative that the second population has a lower mean/percentile, the
// difference statistics (T, W, EM, EL) reject for small values; ELR rejects
// for large values.
enum class Orientation { reject_large, reject_small };

struct StatisticSpec {
  StatKind kind = StatKind::T;
  std::optional<double> level;         // alpha_q for EM/EL/ELR
  std::optional<BasisFunction> basis;  // for EL/ELR
  Orientation orientation = Orientation::reject_small;

  static StatisticSpec t();
  static StatisticSpec w();
  static StatisticSpec em(double level);
  static StatisticSpec el(double level, BasisFunction basis);
  static StatisticSpec elr(double level, BasisFunction basis);
  // Parses "T", "W", "EM:0.5", "EL:0.05", "ELR:0.5" (levels required for
  // the quantile statistics; basis supplied separately).
  static StatisticSpec parse(const std::string& text,
                             const BasisFunction& default_basis);

  std::string name() const;
  // Throws ParseError if level/basis are missing or superfluous.
  void check() const;
};

struct PermuteOptions {
  bool step1plus = true;  // reassign rotation-only clusters as well
  int first = 0;          // the occasion pair subjected to Steps I / I+
  int second = 1;
  std::set<int> exclude;  // dropped clusters, never swapped (Step I)
};

// One random permutation of the sample: overlap clusters swap their
// occasion-(first,second) vectors with probability 1/2 each; rotation-only
// clusters are randomly repartitioned between the two exclusive slots when
// step1plus is on; all other occasions are untouched.
RotatingPanelSample permute_once(const RotatingPanelSample& sample,
                                 RandomStream& rng,
                                 const PermuteOptions& options = {});

// Computes the statistic described by spec on a sample. Throws on failure
// (solver divergence, basis domain, degenerate data).
double compute_statistic(const RotatingPanelSample& sample,
                         const StatisticSpec& spec);

struct PermutationResult {
  double observed = 0.0;
  std::vector<double> replicates;  // successful replicate statistics
  int failed_replicates = 0;
  double p_value = 1.0;
  double alpha_test = 0.05;
  bool reject = false;
};

// The permutation test: draws M permuted samples, computes the statistic on
// each, and estimates p* as the proportion of successful replicates strictly
// beyond the observed value in the rejection direction. Failed replicates
// are excluded from numerator and denominator and counted.
PermutationResult permutation_test(const RotatingPanelSample& sample,
                                   const StatisticSpec& spec, int num_perms,
                                   double alpha_test, uint64_t seed,
                                   const PermuteOptions& options = {});

// Evaluates several statistics on the same sample, sharing the DRM profile
// fit between EL and ELR (and across levels). Returns one entry per spec;
// nullopt marks a failed statistic, with the error message in `errors`.
struct MultiStatResult {
  std::vector<std::optional<double>> values;
  std::vector<std::string> errors;  // empty string when the value is present
};
MultiStatResult evaluate_statistics(const RotatingPanelSample& sample,
                                    const std::vector<StatisticSpec>& specs,
                                    const Eigen::MatrixXd* theta_hint = nullptr,
                                    Eigen::MatrixXd* theta_out = nullptr);

// Runs `num_reps` independent permutation tests on freshly generated
// H0 samples and returns their p-values; used to probe Theorem-1
// uniformity. The generator receives a per-repetition seed.
template <typename Generator>
std::vector<double> uniformity_probe(Generator&& generate,
                                     const StatisticSpec& spec, int num_perms,
                                     int num_reps, uint64_t seed,
                                     const PermuteOptions& options = {}) {
  std::vector<double> pvalues;
  pvalues.reserve(num_reps);
  for (int rep = 0; rep < num_reps; ++rep) {
    const RotatingPanelSample sample = generate(derive_seed(seed, rep, 1));
    const auto result = permutation_test(sample, spec, num_perms, 0.05,
                                         derive_seed(seed, rep, 2), options);
    pvalues.push_back(result.p_value);
  }
  return pvalues;
}

}  // namespace rotperm

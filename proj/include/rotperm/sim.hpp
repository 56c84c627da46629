#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rotperm/config.hpp"
#include "rotperm/panel.hpp"
#include "rotperm/permute.hpp"
#include "rotperm/stats.hpp"

namespace rotperm {

enum class ModelKind { normal, gamma, noname };

ModelKind model_from_name(const std::string& name);
std::string model_name(ModelKind model);

// Full description of one simulation study: the data-generating model with
// its fixed leading parameters, the per-repetition randomization rules for
// the unspecified trailing parameters, and the testing setup.
struct SimulationConfig {
  ModelKind model = ModelKind::normal;
  PlanConfig plan{5, 36, 6, 5, 6};

  // normal model: occasions beyond `normal_means` draw
  // mean_base + mean_spread * N(0,1) per repetition.
  std::vector<double> normal_means{8.0, 8.0};
  std::vector<double> normal_sigmas{1.0, 1.0, 2.0};
  double mean_base = 8.0;
  double mean_spread = 0.5;

  // gamma model: trailing etas draw eta_base + eta_spread * N(0,1),
  // trailing lambdas draw lambda_base + lambda_spread * U(0,1).
  double gamma1 = 2.0;
  double gamma2 = 1.5;
  std::vector<double> gamma_etas{8.0, 8.0};
  std::vector<double> gamma_lambdas{1.0, 1.0};
  double eta_base = 8.0;
  double eta_spread = 0.5;
  double lambda_base = 1.0;
  double lambda_spread = 0.2;

  // noname model: trailing sigma2 entries draw
  // sigma2_base + sigma2_spread * U(0,1).
  std::vector<double> population;
  double noname_sigma1 = 2.0;
  std::vector<double> noname_sigma2s{6.0, 6.0};
  double sigma2_base = 3.0;
  double sigma2_spread = 2.0;
  double lambda_shape = 20.0;
  double lambda_scale = 0.05;

  std::vector<StatisticSpec> statistics;
  bool nonperm_columns = true;  // asymptotic t/W p-values ignoring clusters
  int num_reps = 1000;
  int num_perms = 201;
  double alpha_test = 0.05;
  uint64_t master_seed = 1;
  int parallelism = 1;
  bool step1plus = true;
  std::string label = "setting";
  int max_regenerations = 64;  // retries per repetition on observed failure
};

// Builds a SimulationConfig from flat configuration keys (see README for
// the schema); population files are loaded here.
SimulationConfig simulation_from_config(const KeyValueConfig& cfg);

struct ResultCell {
  std::string setting;
  std::string statistic;
  std::string mode;  // "perm" or "nonperm"
  int rejections = 0;
  int reps = 0;
  long long failed_replicates = 0;

  double rate_percent() const;
  double se_percent() const;
};

struct ResultTable {
  std::vector<ResultCell> cells;
  int requested_reps = 0;
  int num_perms = 0;
  double alpha_test = 0.05;
  uint64_t master_seed = 0;
  int extra_repetitions = 0;   // dropped-and-regenerated count
  int abandoned_reps = 0;      // repetitions that never produced a statistic
  std::string warning;

  const ResultCell* find(const std::string& statistic,
                         const std::string& mode) const;
  std::string to_text() const;
  std::string to_csv() const;
  std::string to_json() const;
};

// One-sided (lower tail) asymptotic p-values computed as if the data were
// IID: t with pooled variance, Wilcoxon normal approximation with
// tie-corrected variance.
struct NonPermPValues {
  double t_pvalue;
  double w_pvalue;
};
NonPermPValues nonperm_pvalues(const TwoSampleView& view);

// Monte Carlo study over num_reps repetitions: generates a sample per
// repetition (with the per-repetition randomized parameters), runs the
// permutation test for every statistic and the non-permutation t/W tests,
// and tallies rejection rates. Repetitions whose observed statistic fails
// are dropped and regenerated. Bit-reproducible for fixed
// (config, master_seed) at any parallelism.
ResultTable run_simulation(const SimulationConfig& cfg);

// Draws the fully specified model realization for one repetition.
RotatingPanelSample generate_for_repetition(const SimulationConfig& cfg,
                                            uint64_t rep_seed);

}  // namespace rotperm

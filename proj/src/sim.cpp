#include "rotperm/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "rotperm/csv.hpp"
#include "rotperm/errors.hpp"
#include "rotperm/special.hpp"
#include "rotperm/synth.hpp"

namespace rotperm {

namespace {
// vendor/json.hpp provides nlohmann/json via the vendor include path
using ordered_json = nlohmann::ordered_json;

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, threads);
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  for (auto& t : pool) t.join();
}

std::string format_percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

ModelKind model_from_name(const std::string& name) {
  if (name == "normal") return ModelKind::normal;
  if (name == "gamma") return ModelKind::gamma;
  if (name == "noname") return ModelKind::noname;
  throw ParseError("unknown model '" + name +
                   "' (expected normal|gamma|noname)");
}

std::string model_name(ModelKind model) {
  switch (model) {
    case ModelKind::normal: return "normal";
    case ModelKind::gamma: return "gamma";
    case ModelKind::noname: return "noname";
  }
  return "?";
}

SimulationConfig simulation_from_config(const KeyValueConfig& cfg) {
  SimulationConfig sim;
  sim.model = model_from_name(cfg.get("sim.model", "normal"));
  sim.plan.num_occasions = cfg.get_int("plan.occasions", 5);
  sim.plan.clusters_per_occasion = cfg.get_int("plan.clusters", 36);
  sim.plan.replaced_per_occasion = cfg.get_int("plan.replaced", 6);
  sim.plan.cluster_size = cfg.get_int("plan.cluster_size", 5);
  sim.plan.full_rotation =
      cfg.get_int("plan.rotation", sim.plan.replaced_per_occasion > 0
                                       ? sim.plan.clusters_per_occasion /
                                             sim.plan.replaced_per_occasion
                                       : 0);

  sim.normal_means = cfg.get_doubles("normal.means", sim.normal_means);
  sim.normal_sigmas = cfg.get_doubles("normal.sigmas", sim.normal_sigmas);
  sim.mean_base = cfg.get_double("normal.mean_base", sim.mean_base);
  sim.mean_spread = cfg.get_double("normal.mean_spread", sim.mean_spread);

  sim.gamma1 = cfg.get_double("gamma.gamma1", sim.gamma1);
  sim.gamma2 = cfg.get_double("gamma.gamma2", sim.gamma2);
  sim.gamma_etas = cfg.get_doubles("gamma.etas", sim.gamma_etas);
  sim.gamma_lambdas = cfg.get_doubles("gamma.lambdas", sim.gamma_lambdas);
  sim.eta_base = cfg.get_double("gamma.eta_base", sim.eta_base);
  sim.eta_spread = cfg.get_double("gamma.eta_spread", sim.eta_spread);
  sim.lambda_base = cfg.get_double("gamma.lambda_base", sim.lambda_base);
  sim.lambda_spread = cfg.get_double("gamma.lambda_spread", sim.lambda_spread);

  if (cfg.has("noname.population"))
    sim.population = load_population(cfg.get("noname.population", ""));
  sim.noname_sigma1 = cfg.get_double("noname.sigma1", sim.noname_sigma1);
  sim.noname_sigma2s = cfg.get_doubles("noname.sigma2s", sim.noname_sigma2s);
  sim.sigma2_base = cfg.get_double("noname.sigma2_base", sim.sigma2_base);
  sim.sigma2_spread = cfg.get_double("noname.sigma2_spread", sim.sigma2_spread);
  sim.lambda_shape = cfg.get_double("noname.lambda_shape", sim.lambda_shape);
  sim.lambda_scale = cfg.get_double("noname.lambda_scale", sim.lambda_scale);

  const std::string default_basis_name =
      sim.model == ModelKind::normal
          ? "normal2"
          : (sim.model == ModelKind::gamma ? "gamma2" : "general3");
  const BasisFunction basis =
      BasisFunction::from_name(cfg.get("sim.basis", default_basis_name));
  for (const auto& text : cfg.get_list("sim.stats", {"T", "W"}))
    sim.statistics.push_back(StatisticSpec::parse(text, basis));

  sim.nonperm_columns = cfg.get_bool("sim.nonperm", true);
  sim.num_reps = cfg.get_int("sim.reps", sim.num_reps);
  sim.num_perms = cfg.get_int("sim.perms", sim.num_perms);
  sim.alpha_test = cfg.get_double("sim.alpha", sim.alpha_test);
  sim.master_seed = uint64_t(cfg.get_double("sim.seed", 1));
  sim.parallelism = cfg.get_int("sim.threads", 1);
  sim.step1plus = cfg.get_bool("sim.step1plus", true);
  sim.label = cfg.get("sim.label", sim.label);

  if (sim.num_reps < 1) throw ParseError("sim.reps must be >= 1");
  if (sim.num_perms < 1) throw ParseError("sim.perms must be >= 1");
  return sim;
}

double ResultCell::rate_percent() const {
  return reps > 0 ? 100.0 * double(rejections) / double(reps) : 0.0;
}

double ResultCell::se_percent() const {
  if (reps <= 0) return 0.0;
  const double p = double(rejections) / double(reps);
  return 100.0 * std::sqrt(p * (1.0 - p) / double(reps));
}

const ResultCell* ResultTable::find(const std::string& statistic,
                                    const std::string& mode) const {
  for (const auto& cell : cells)
    if (cell.statistic == statistic && cell.mode == mode) return &cell;
  return nullptr;
}

std::string ResultTable::to_text() const {
  std::ostringstream out;
  out << "setting          statistic  mode      reject%      se%  failed_reps\n";
  char line[160];
  for (const auto& c : cells) {
    std::snprintf(line, sizeof line, "%-16s %-10s %-7s %8.2f %8.2f %12lld\n",
                  c.setting.c_str(), c.statistic.c_str(), c.mode.c_str(),
                  c.rate_percent(), c.se_percent(), c.failed_replicates);
    out << line;
  }
  out << "reps=" << requested_reps << " perms=" << num_perms
      << " alpha=" << alpha_test << " seed=" << master_seed
      << " regenerated=" << extra_repetitions << "\n";
  if (!warning.empty()) out << "WARNING: " << warning << "\n";
  return out.str();
}

std::string ResultTable::to_csv() const {
  std::ostringstream out;
  out << "setting,statistic,mode,rejections,reps,reject_percent,se_percent,"
         "failed_replicates\n";
  for (const auto& c : cells)
    out << c.setting << ',' << c.statistic << ',' << c.mode << ','
        << c.rejections << ',' << c.reps << ','
        << format_percent(c.rate_percent()) << ','
        << format_percent(c.se_percent()) << ',' << c.failed_replicates
        << '\n';
  return out.str();
}

std::string ResultTable::to_json() const {
  ordered_json root;
  root["requested_reps"] = requested_reps;
  root["num_perms"] = num_perms;
  root["alpha_test"] = alpha_test;
  root["master_seed"] = master_seed;
  root["extra_repetitions"] = extra_repetitions;
  root["abandoned_reps"] = abandoned_reps;
  if (!warning.empty()) root["warning"] = warning;
  root["cells"] = ordered_json::array();
  for (const auto& c : cells) {
    ordered_json cell;
    cell["setting"] = c.setting;
    cell["statistic"] = c.statistic;
    cell["mode"] = c.mode;
    cell["rejections"] = c.rejections;
    cell["reps"] = c.reps;
    cell["reject_percent"] = c.rate_percent();
    cell["se_percent"] = c.se_percent();
    cell["failed_replicates"] = c.failed_replicates;
    root["cells"].push_back(cell);
  }
  return root.dump(2) + "\n";
}

NonPermPValues nonperm_pvalues(const TwoSampleView& view) {
  const double t = t_statistic(view);  // throws on degenerate variance
  const double df = view.n0() + view.n1() - 2;
  const double t_p = special::student_t_cdf(t, df);

  const double w = wilcoxon_statistic(view);
  const double n0 = view.n0();
  const double n1 = view.n1();
  const double n = n0 + n1;
  // Tie correction over the pooled sample.
  std::vector<double> pooled = view.sample0;
  pooled.insert(pooled.end(), view.sample1.begin(), view.sample1.end());
  std::sort(pooled.begin(), pooled.end());
  double tie_sum = 0.0;
  for (size_t i = 0; i < pooled.size();) {
    size_t j = i;
    while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
    const double ties = double(j - i);
    tie_sum += ties * ties * ties - ties;
    i = j;
  }
  const double mean = n0 * n1 / 2.0;
  const double var =
      n0 * n1 / 12.0 * ((n + 1.0) - tie_sum / (n * (n - 1.0)));
  if (!(var > 0.0)) throw StatisticError("degenerate sample");
  const double w_p = special::normal_cdf((w - mean) / std::sqrt(var));
  return {t_p, w_p};
}

RotatingPanelSample generate_for_repetition(const SimulationConfig& cfg,
                                            uint64_t rep_seed) {
  RandomStream params(rep_seed, StreamRole::rep_params, 0);
  const int occasions = cfg.plan.num_occasions;
  switch (cfg.model) {
    case ModelKind::normal: {
      NormalModelConfig m;
      m.plan = cfg.plan;
      m.seed = rep_seed;
      if (cfg.normal_sigmas.size() != 3)
        throw ParseError("normal.sigmas must have 3 entries");
      m.sigma1 = cfg.normal_sigmas[0];
      m.sigma2 = cfg.normal_sigmas[1];
      m.sigma3 = cfg.normal_sigmas[2];
      m.means = cfg.normal_means;
      m.means.resize(occasions);
      for (int k = int(cfg.normal_means.size()); k < occasions; ++k)
        m.means[k] = cfg.mean_base + cfg.mean_spread * params.next_normal();
      return generate_normal(m);
    }
    case ModelKind::gamma: {
      GammaModelConfig m;
      m.plan = cfg.plan;
      m.seed = rep_seed;
      m.gamma1 = cfg.gamma1;
      m.gamma2 = cfg.gamma2;
      m.etas = cfg.gamma_etas;
      m.etas.resize(occasions);
      for (int k = int(cfg.gamma_etas.size()); k < occasions; ++k)
        m.etas[k] = cfg.eta_base + cfg.eta_spread * params.next_normal();
      m.lambdas = cfg.gamma_lambdas;
      m.lambdas.resize(occasions);
      for (int k = int(cfg.gamma_lambdas.size()); k < occasions; ++k)
        m.lambdas[k] = cfg.lambda_base + cfg.lambda_spread * params.next_double();
      return generate_gamma(m);
    }
    case ModelKind::noname: {
      NoNameModelConfig m;
      m.plan = cfg.plan;
      m.seed = rep_seed;
      m.population = cfg.population;
      m.sigma1 = cfg.noname_sigma1;
      m.lambda_shape = cfg.lambda_shape;
      m.lambda_scale = cfg.lambda_scale;
      m.sigma2s = cfg.noname_sigma2s;
      m.sigma2s.resize(occasions);
      for (int k = int(cfg.noname_sigma2s.size()); k < occasions; ++k)
        m.sigma2s[k] = cfg.sigma2_base + cfg.sigma2_spread * params.next_double();
      return generate_noname(m);
    }
  }
  throw ParseError("unknown model");
}

namespace {

struct RepOutcome {
  bool abandoned = false;
  int regenerations = 0;
  std::vector<int> perm_reject;   // per statistic, 0/1
  std::vector<long long> failed;  // per statistic
  int nonperm_t_reject = -1;      // -1 = not computed
  int nonperm_w_reject = -1;
};

}  // namespace

ResultTable run_simulation(const SimulationConfig& cfg) {
  for (const auto& spec : cfg.statistics) spec.check();
  const auto plan_problems = cfg.plan.check();
  if (!plan_problems.empty())
    throw ParseError("invalid plan: " + plan_problems[0]);
  if (cfg.model == ModelKind::noname && cfg.population.empty())
    throw ParseError("noname model requires a population");

  const int num_stats = int(cfg.statistics.size());
  const bool want_nonperm = cfg.nonperm_columns;
  PermuteOptions popts;
  popts.step1plus = cfg.step1plus;

  std::vector<RepOutcome> outcomes(cfg.num_reps);

  parallel_for(cfg.num_reps, cfg.parallelism, [&](int rep) {
    RepOutcome& out = outcomes[rep];
    out.perm_reject.assign(num_stats, 0);
    out.failed.assign(num_stats, 0);

    // Drop-and-regenerate: a repetition whose observed statistic fails is
    // replaced by a fresh draw from the same stream family.
    int attempt = 0;
    std::optional<RotatingPanelSample> sample;
    MultiStatResult observed;
    Eigen::MatrixXd theta_hint;
    for (; attempt < cfg.max_regenerations; ++attempt) {
      const uint64_t rep_seed =
          derive_seed(cfg.master_seed, uint64_t(rep), uint64_t(attempt));
      sample = generate_for_repetition(cfg, rep_seed);
      observed = evaluate_statistics(*sample, cfg.statistics, nullptr,
                                     &theta_hint);
      const bool ok = std::all_of(observed.values.begin(),
                                  observed.values.end(),
                                  [](const auto& v) { return v.has_value(); });
      if (ok) break;
    }
    out.regenerations = attempt;
    if (attempt == cfg.max_regenerations) {
      out.abandoned = true;
      return;
    }
    const uint64_t rep_seed =
        derive_seed(cfg.master_seed, uint64_t(rep), uint64_t(attempt));

    if (want_nonperm) {
      try {
        const auto np = nonperm_pvalues(make_view(*sample));
        out.nonperm_t_reject = np.t_pvalue < cfg.alpha_test ? 1 : 0;
        out.nonperm_w_reject = np.w_pvalue < cfg.alpha_test ? 1 : 0;
      } catch (const Error&) {
        // degenerate two-sample view; left uncomputed
      }
    }

    std::vector<int> exceed(num_stats, 0);
    std::vector<int> success(num_stats, 0);
    const uint64_t perm_seed = derive_seed(rep_seed, 0x70657231ull);
    for (int m = 0; m < cfg.num_perms; ++m) {
      RandomStream rng(perm_seed, StreamRole::swap_bits, uint64_t(m));
      const RotatingPanelSample permuted = permute_once(*sample, rng, popts);
      const auto rep_eval =
          evaluate_statistics(permuted, cfg.statistics, &theta_hint, nullptr);
      for (int s = 0; s < num_stats; ++s) {
        if (!rep_eval.values[s]) {
          ++out.failed[s];
          continue;
        }
        ++success[s];
        const double observed_value = *observed.values[s];
        const double value = *rep_eval.values[s];
        if (cfg.statistics[s].orientation == Orientation::reject_large
                ? value > observed_value
                : value < observed_value)
          ++exceed[s];
      }
    }
    for (int s = 0; s < num_stats; ++s) {
      if (success[s] == 0) {
        out.perm_reject[s] = 0;
        continue;
      }
      const double p = double(exceed[s]) / double(success[s]);
      out.perm_reject[s] = p < cfg.alpha_test ? 1 : 0;
    }
  });

  ResultTable table;
  table.requested_reps = cfg.num_reps;
  table.num_perms = cfg.num_perms;
  table.alpha_test = cfg.alpha_test;
  table.master_seed = cfg.master_seed;

  std::vector<ResultCell> perm_cells(num_stats);
  for (int s = 0; s < num_stats; ++s) {
    perm_cells[s].setting = cfg.label;
    perm_cells[s].statistic = cfg.statistics[s].name();
    perm_cells[s].mode = "perm";
  }
  ResultCell np_t{cfg.label, "T", "nonperm", 0, 0, 0};
  ResultCell np_w{cfg.label, "W", "nonperm", 0, 0, 0};

  for (const auto& out : outcomes) {
    if (out.abandoned) {
      ++table.abandoned_reps;
      table.extra_repetitions += out.regenerations;
      continue;
    }
    table.extra_repetitions += out.regenerations;
    for (int s = 0; s < num_stats; ++s) {
      ++perm_cells[s].reps;
      perm_cells[s].rejections += out.perm_reject[s];
      perm_cells[s].failed_replicates += out.failed[s];
    }
    if (out.nonperm_t_reject >= 0) {
      ++np_t.reps;
      np_t.rejections += out.nonperm_t_reject;
    }
    if (out.nonperm_w_reject >= 0) {
      ++np_w.reps;
      np_w.rejections += out.nonperm_w_reject;
    }
  }

  if (want_nonperm && np_t.reps > 0) table.cells.push_back(np_t);
  if (want_nonperm && np_w.reps > 0) table.cells.push_back(np_w);
  for (auto& cell : perm_cells) table.cells.push_back(std::move(cell));

  if (table.extra_repetitions > cfg.num_reps / 20) {
    table.warning = "regenerated " + std::to_string(table.extra_repetitions) +
                    " repetitions (more than 5% of " +
                    std::to_string(cfg.num_reps) +
                    "); inspect solver failures";
    std::fprintf(stderr, "WARNING: %s\n", table.warning.c_str());
  }
  return table;
}

}  // namespace rotperm

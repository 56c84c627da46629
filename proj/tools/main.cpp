// rotperm: permutation tests for clustered data under rotating sampling
// plans. Subcommands: test, simulate, generate, validate.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rotperm/csv.hpp"
#include "rotperm/errors.hpp"
#include "rotperm/permute.hpp"
#include "rotperm/sim.hpp"
#include "rotperm/synth.hpp"

using nlohmann::ordered_json;
using namespace rotperm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStatistic = 3;

struct CommonOpts {
  std::string config_path;
  std::string out_path;
  std::string format = "text";
  std::vector<std::string> stats;
  std::string model;
  std::string basis;
  double level = 0.5;
  double alpha = 0.05;
  int perms = -1;
  int reps = -1;
  long long seed = -1;
  int threads = -1;
  bool no_step1plus = false;
};

void add_common_flags(CLI::App* app, CommonOpts& opts) {
  app->add_option("--config", opts.config_path, "key = value config file");
  app->add_option("--out", opts.out_path, "write output to this path");
  app->add_option("--format", opts.format, "text|csv|json")
      ->check(CLI::IsMember({"text", "csv", "json"}));
  app->add_option("--stat", opts.stats,
                  "statistic, repeatable: T, W, EM:level, EL:level, ELR:level");
  app->add_option("--model", opts.model, "normal|gamma|noname");
  app->add_option("--basis", opts.basis,
                  "linear1|normal2|gamma2|general3");
  app->add_option("--level", opts.level, "default quantile level alpha_q");
  app->add_option("--alpha", opts.alpha, "test level alpha");
  app->add_option("--perms", opts.perms, "number of permutations M");
  app->add_option("--reps", opts.reps, "simulation repetitions");
  app->add_option("--seed", opts.seed, "master seed");
  app->add_option("--threads", opts.threads, "worker threads");
  app->add_flag("--no-step1plus", opts.no_step1plus,
                "disable the rotation-only reassignment step");
}

KeyValueConfig merged_config(const CommonOpts& opts) {
  KeyValueConfig cfg;
  if (!opts.config_path.empty()) cfg = KeyValueConfig::load(opts.config_path);
  if (!opts.model.empty()) cfg.set("sim.model", opts.model);
  if (!opts.basis.empty()) cfg.set("sim.basis", opts.basis);
  if (!opts.stats.empty()) {
    std::string joined;
    for (const auto& s : opts.stats) {
      if (!joined.empty()) joined += ",";
      // A bare quantile statistic picks up --level.
      if ((s == "EM" || s == "EL" || s == "ELR") &&
          s.find(':') == std::string::npos)
        joined += s + ":" + std::to_string(opts.level);
      else
        joined += s;
    }
    cfg.set("sim.stats", joined);
  }
  if (opts.perms > 0) cfg.set("sim.perms", std::to_string(opts.perms));
  if (opts.reps > 0) cfg.set("sim.reps", std::to_string(opts.reps));
  if (opts.seed >= 0) cfg.set("sim.seed", std::to_string(opts.seed));
  if (opts.threads > 0) cfg.set("sim.threads", std::to_string(opts.threads));
  if (opts.no_step1plus) cfg.set("sim.step1plus", "false");
  cfg.set("sim.alpha", std::to_string(opts.alpha));
  return cfg;
}

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw ParseError("cannot write " + out_path);
  out << text;
}

int cmd_test(const std::string& data_path, const CommonOpts& opts) {
  const RotatingPanelSample sample = ingest_csv(data_path);
  if (const auto warn = overlap_warning(sample))
    std::cerr << "warning: " << *warn << "\n";

  const KeyValueConfig cfg = merged_config(opts);
  const BasisFunction basis = BasisFunction::from_name(
      cfg.get("sim.basis", "normal2"));
  std::vector<StatisticSpec> specs;
  for (const auto& text : cfg.get_list("sim.stats", {"T"}))
    specs.push_back(StatisticSpec::parse(text, basis));

  const int num_perms = cfg.get_int("sim.perms", 10001);
  const double alpha = cfg.get_double("sim.alpha", 0.05);
  const uint64_t seed = uint64_t(cfg.get_double("sim.seed", 1));
  PermuteOptions popts;
  popts.step1plus = cfg.get_bool("sim.step1plus", true);

  ordered_json report;
  report["data"] = data_path;
  report["num_perms"] = num_perms;
  report["alpha_test"] = alpha;
  report["seed"] = seed;
  report["results"] = ordered_json::array();
  std::ostringstream text;
  for (const auto& spec : specs) {
    const PermutationResult res =
        permutation_test(sample, spec, num_perms, alpha, seed, popts);
    text << spec.name() << ": observed=" << res.observed
         << " p*=" << res.p_value
         << (res.reject ? " reject" : " no-reject")
         << " failed_replicates=" << res.failed_replicates << "\n";
    ordered_json row;
    row["statistic"] = spec.name();
    row["observed"] = res.observed;
    row["p_value"] = res.p_value;
    row["reject"] = res.reject;
    row["failed_replicates"] = res.failed_replicates;
    report["results"].push_back(row);
  }
  if (opts.format == "json")
    write_output(report.dump(2) + "\n", opts.out_path);
  else
    write_output(text.str(), opts.out_path);
  return kExitOk;
}

int cmd_simulate(const CommonOpts& opts) {
  const KeyValueConfig cfg = merged_config(opts);
  const SimulationConfig sim = simulation_from_config(cfg);
  const ResultTable table = run_simulation(sim);
  if (opts.format == "json")
    write_output(table.to_json(), opts.out_path);
  else if (opts.format == "csv")
    write_output(table.to_csv(), opts.out_path);
  else
    write_output(table.to_text(), opts.out_path);
  return kExitOk;
}

int cmd_generate(const CommonOpts& opts) {
  const KeyValueConfig cfg = merged_config(opts);
  SimulationConfig sim = simulation_from_config(cfg);
  const uint64_t rep_seed = derive_seed(sim.master_seed, 0, 0);
  const RotatingPanelSample sample = generate_for_repetition(sim, rep_seed);
  if (opts.out_path.empty()) {
    std::ostringstream ss;
    emit_csv(sample, ss);
    std::cout << ss.str();
  } else {
    emit_csv_file(sample, opts.out_path);
  }
  return kExitOk;
}

int cmd_validate(const std::string& data_path) {
  const RotatingPanelSample sample = parse_csv_file(data_path);
  const auto violations = validate(sample);
  if (const auto warn = overlap_warning(sample))
    std::cerr << "warning: " << *warn << "\n";
  if (violations.empty()) {
    std::cout << "OK: " << data_path << " (" << sample.num_occasions()
              << " occasions, " << sample.plan().clusters_per_occasion
              << " clusters/occasion, cluster size "
              << sample.plan().cluster_size << ")\n";
    return kExitOk;
  }
  std::cout << violations.size() << " violation(s) in " << data_path << ":\n";
  for (const auto& v : violations)
    std::cout << "  [" << v.code << "] " << v.message << "\n";
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"permutation tests for clustered rotating-panel data"};
  app.require_subcommand(1);

  CommonOpts topts, sopts, gopts;
  std::string test_path, validate_path;

  CLI::App* test = app.add_subcommand("test", "permutation test on a CSV dataset");
  test->add_option("data", test_path, "CSV file")->required();
  add_common_flags(test, topts);

  CLI::App* simulate =
      app.add_subcommand("simulate", "Monte Carlo rejection-rate study");
  add_common_flags(simulate, sopts);

  CLI::App* generate =
      app.add_subcommand("generate", "emit a synthetic CSV dataset");
  add_common_flags(generate, gopts);

  CLI::App* validate_cmd =
      app.add_subcommand("validate", "schema/invariant check of a CSV dataset");
  validate_cmd->add_option("data", validate_path, "CSV file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (test->parsed()) return cmd_test(test_path, topts);
    if (simulate->parsed()) return cmd_simulate(sopts);
    if (generate->parsed()) return cmd_generate(gopts);
    if (validate_cmd->parsed()) return cmd_validate(validate_path);
  } catch (const StatisticError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStatistic;
  } catch (const FitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStatistic;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}

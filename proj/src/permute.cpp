#include "rotperm/permute.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rotperm/errors.hpp"
#include "rotperm/stats.hpp"

namespace rotperm {

StatisticSpec StatisticSpec::t() { return {StatKind::T, {}, {}, Orientation::reject_small}; }
StatisticSpec StatisticSpec::w() { return {StatKind::W, {}, {}, Orientation::reject_small}; }
StatisticSpec StatisticSpec::em(double level) {
  return {StatKind::EM, level, {}, Orientation::reject_small};
}
StatisticSpec StatisticSpec::el(double level, BasisFunction basis) {
  return {StatKind::EL, level, basis, Orientation::reject_small};
}
StatisticSpec StatisticSpec::elr(double level, BasisFunction basis) {
  return {StatKind::ELR, level, basis, Orientation::reject_large};
}

StatisticSpec StatisticSpec::parse(const std::string& text,
                                   const BasisFunction& default_basis) {
  std::string kind = text;
  std::optional<double> level;
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    kind = text.substr(0, colon);
    try {
      level = std::stod(text.substr(colon + 1));
    } catch (const std::exception&) {
      throw ParseError("bad statistic level in '" + text + "'");
    }
  }
  if (kind == "T" || kind == "t") return t();
  if (kind == "W" || kind == "w") return w();
  if (!level)
    throw ParseError("statistic '" + kind +
                     "' needs a level, e.g. " + kind + ":0.5");
  if (kind == "EM" || kind == "em") return em(*level);
  if (kind == "EL" || kind == "el") return el(*level, default_basis);
  if (kind == "ELR" || kind == "elr") return elr(*level, default_basis);
  throw ParseError("unknown statistic '" + kind + "'");
}

std::string StatisticSpec::name() const {
  std::string base;
  switch (kind) {
    case StatKind::T: return "T";
    case StatKind::W: return "W";
    case StatKind::EM: base = "EM"; break;
    case StatKind::EL: base = "EL"; break;
    case StatKind::ELR: base = "ELR"; break;
  }
  if (level) {
    std::string lv = std::to_string(*level);
    lv.erase(lv.find_last_not_of('0') + 1);
    if (!lv.empty() && lv.back() == '.') lv.pop_back();
    base += ":" + lv;
  }
  return base;
}

void StatisticSpec::check() const {
  const bool needs_level =
      kind == StatKind::EM || kind == StatKind::EL || kind == StatKind::ELR;
  const bool needs_basis = kind == StatKind::EL || kind == StatKind::ELR;
  if (needs_level != level.has_value())
    throw ParseError("statistic " + name() +
                     (needs_level ? " requires a level" : " takes no level"));
  if (needs_level && !(*level > 0.0 && *level < 1.0))
    throw ParseError("statistic level must be in (0,1)");
  if (needs_basis != basis.has_value())
    throw ParseError("statistic " + name() +
                     (needs_basis ? " requires a basis" : " takes no basis"));
}

RotatingPanelSample permute_once(const RotatingPanelSample& sample,
                                 RandomStream& rng,
                                 const PermuteOptions& options) {
  const int k1 = options.first;
  const int k2 = options.second;
  const OverlapSets overlap = overlap_sets(sample, k1, k2);
  SampleEditor editor(sample);

  // Step I: swap whole cluster vectors between the two occasions with
  // probability 1/2, independently per shared cluster.
  for (int id : overlap.both) {
    if (options.exclude.count(id)) continue;
    const bool swap = rng.next_below(2) == 1;
    if (swap) {
      std::vector<double> v1(sample.values(k1, id).begin(),
                             sample.values(k1, id).end());
      std::vector<double> v2(sample.values(k2, id).begin(),
                             sample.values(k2, id).end());
      editor.set_values(k1, id, std::move(v2));
      editor.set_values(k2, id, std::move(v1));
    }
  }

  // Step I+: pool the cluster vectors observed only on one of the two
  // occasions and deal them back uniformly at random, keeping the slot
  // counts on each side.
  if (options.step1plus &&
      !(overlap.only_first.empty() && overlap.only_second.empty())) {
    std::vector<std::vector<double>> pool;
    pool.reserve(overlap.only_first.size() + overlap.only_second.size());
    for (int id : overlap.only_first)
      pool.emplace_back(sample.values(k1, id).begin(),
                        sample.values(k1, id).end());
    for (int id : overlap.only_second)
      pool.emplace_back(sample.values(k2, id).begin(),
                        sample.values(k2, id).end());
    for (size_t i = pool.size(); i > 1; --i)
      std::swap(pool[i - 1], pool[rng.next_below(i)]);
    size_t next = 0;
    for (int id : overlap.only_first)
      editor.set_values(k1, id, std::move(pool[next++]));
    for (int id : overlap.only_second)
      editor.set_values(k2, id, std::move(pool[next++]));
  }

  return std::move(editor).build();
}

double compute_statistic(const RotatingPanelSample& sample,
                         const StatisticSpec& spec) {
  spec.check();
  switch (spec.kind) {
    case StatKind::T: return t_statistic(make_view(sample));
    case StatKind::W: return wilcoxon_statistic(make_view(sample));
    case StatKind::EM: return em_statistic(make_view(sample), *spec.level);
    case StatKind::EL: return el_statistic(sample, *spec.basis, *spec.level);
    case StatKind::ELR:
      return elr_statistic(sample, *spec.basis, *spec.level);
  }
  throw StatisticError("unknown statistic kind");
}

PermutationResult permutation_test(const RotatingPanelSample& sample,
                                   const StatisticSpec& spec, int num_perms,
                                   double alpha_test, uint64_t seed,
                                   const PermuteOptions& options) {
  spec.check();
  if (num_perms < 1) throw ParseError("permutation count must be >= 1");

  PermutationResult result;
  result.alpha_test = alpha_test;
  try {
    result.observed = compute_statistic(sample, spec);
  } catch (const Error& e) {
    throw StatisticError(std::string("observed statistic failed: ") +
                         e.what());
  }

  result.replicates.reserve(num_perms);
  int exceed = 0;
  for (int m = 0; m < num_perms; ++m) {
    RandomStream rng(seed, StreamRole::swap_bits, uint64_t(m));
    const RotatingPanelSample permuted = permute_once(sample, rng, options);
    double value;
    try {
      value = compute_statistic(permuted, spec);
    } catch (const Error&) {
      ++result.failed_replicates;
      continue;
    }
    result.replicates.push_back(value);
    if (spec.orientation == Orientation::reject_large
            ? value > result.observed
            : value < result.observed)
      ++exceed;
  }
  if (result.replicates.empty())
    throw StatisticError("all permutation replicates failed");
  result.p_value = double(exceed) / double(result.replicates.size());
  result.reject = result.p_value < alpha_test;
  return result;
}

MultiStatResult evaluate_statistics(const RotatingPanelSample& sample,
                                    const std::vector<StatisticSpec>& specs,
                                    const Eigen::MatrixXd* theta_hint,
                                    Eigen::MatrixXd* theta_out) {
  MultiStatResult out;
  out.values.resize(specs.size());
  out.errors.resize(specs.size());

  std::optional<TwoSampleView> view;
  auto get_view = [&]() -> const TwoSampleView& {
    if (!view) view = make_view(sample);
    return *view;
  };

  // One profile fit per distinct basis, shared by EL and ELR at all levels.
  std::map<std::string, std::optional<DrmFit>> profiles;
  std::map<std::string, std::string> profile_errors;
  auto get_profile = [&](const BasisFunction& basis) -> const DrmFit* {
    const std::string key = basis.name();
    auto it = profiles.find(key);
    if (it == profiles.end()) {
      try {
        const Eigen::MatrixXd* hint =
            (theta_hint && theta_hint->rows() == sample.num_occasions() &&
             theta_hint->cols() == basis.dim)
                ? theta_hint
                : nullptr;
        it = profiles.emplace(key, fit_profile(sample, basis, hint)).first;
      } catch (const Error& e) {
        profiles.emplace(key, std::nullopt);
        profile_errors[key] = e.what();
        return nullptr;
      }
    }
    return it->second ? &*it->second : nullptr;
  };

  for (size_t i = 0; i < specs.size(); ++i) {
    const StatisticSpec& spec = specs[i];
    try {
      spec.check();
      switch (spec.kind) {
        case StatKind::T:
          out.values[i] = t_statistic(get_view());
          break;
        case StatKind::W:
          out.values[i] = wilcoxon_statistic(get_view());
          break;
        case StatKind::EM:
          out.values[i] = em_statistic(get_view(), *spec.level);
          break;
        case StatKind::EL: {
          const DrmFit* fit = get_profile(*spec.basis);
          if (!fit) throw FitError(profile_errors[spec.basis->name()]);
          out.values[i] =
              fit->quantile(1, *spec.level) - fit->quantile(0, *spec.level);
          break;
        }
        case StatKind::ELR: {
          const DrmFit* fit = get_profile(*spec.basis);
          if (!fit) throw FitError(profile_errors[spec.basis->name()]);
          const ConstrainedFit constrained = fit_constrained(
              sample, *spec.basis, *spec.level,
              LagrangeWeightForm::consistent, fit);
          out.values[i] = fit->loglik() - constrained.loglik;
          break;
        }
      }
    } catch (const Error& e) {
      out.values[i] = std::nullopt;
      out.errors[i] = e.what();
    }
  }

  if (theta_out) {
    for (auto& [key, fit] : profiles)
      if (fit) {
        *theta_out = fit->theta();
        break;
      }
  }
  return out;
}

}  // namespace rotperm

#include "rotperm/synth.hpp"

#include <cmath>
#include <stdexcept>

#include "rotperm/errors.hpp"
#include "rotperm/rng.hpp"

namespace rotperm {

namespace {

void check_plan(const PlanConfig& plan) {
  const auto problems = plan.check();
  if (!problems.empty()) throw ParseError("invalid plan: " + problems[0]);
}

template <typename PerCluster>
RotatingPanelSample build_canonical(const PlanConfig& plan,
                                    PerCluster&& values_for) {
  auto membership = canonical_membership(plan);
  std::vector<ClusterObservation> obs;
  obs.reserve(size_t(plan.num_occasions) * plan.clusters_per_occasion);
  for (int k = 0; k < plan.num_occasions; ++k)
    for (int id : membership[k]) obs.push_back({k, id, values_for(k, id)});
  return RotatingPanelSample(plan, std::move(membership), std::move(obs));
}

}  // namespace

RotatingPanelSample generate_normal(const NormalModelConfig& cfg) {
  check_plan(cfg.plan);
  if (int(cfg.means.size()) != cfg.plan.num_occasions)
    throw ParseError("normal model: means length must equal num_occasions");
  if (cfg.sigma1 < 0 || cfg.sigma2 < 0 || cfg.sigma3 <= 0)
    throw ParseError("normal model: sigmas must be positive");

  const int r = cfg.plan.cluster_size;
  return build_canonical(cfg.plan, [&](int k, int id) {
    RandomStream eta_i(cfg.seed, StreamRole::longitudinal_effect,
                       stream_id(id, 0, 0));
    const double longitudinal = eta_i.next_normal();
    RandomStream eta_ki(cfg.seed, StreamRole::cross_sectional_effect,
                        stream_id(id, uint16_t(k), 0));
    const double cross = eta_ki.next_normal();
    std::vector<double> vals(r);
    for (int u = 0; u < r; ++u) {
      RandomStream eps(cfg.seed, StreamRole::unit_noise,
                       stream_id(id, uint16_t(k), uint16_t(u + 1)));
      vals[u] = cfg.means[k] + cfg.sigma1 * longitudinal +
                cfg.sigma2 * cross + cfg.sigma3 * eps.next_normal();
    }
    return vals;
  });
}

RotatingPanelSample generate_gamma(const GammaModelConfig& cfg) {
  check_plan(cfg.plan);
  if (int(cfg.etas.size()) != cfg.plan.num_occasions ||
      int(cfg.lambdas.size()) != cfg.plan.num_occasions)
    throw ParseError("gamma model: etas/lambdas length must equal num_occasions");
  if (cfg.gamma1 <= 0 || cfg.gamma2 <= 0)
    throw ParseError("gamma model: gamma1, gamma2 must be positive");
  for (int k = 0; k < cfg.plan.num_occasions; ++k)
    if (cfg.etas[k] <= 0 || cfg.lambdas[k] <= 0)
      throw ParseError("gamma model: etas, lambdas must be positive");

  const int r = cfg.plan.cluster_size;
  return build_canonical(cfg.plan, [&](int k, int id) {
    RandomStream eps_j(cfg.seed, StreamRole::longitudinal_effect,
                       stream_id(id, 0, 0));
    const double longitudinal = eps_j.next_gamma(cfg.gamma1, 1.0);
    RandomStream eps_kj(cfg.seed, StreamRole::cross_sectional_effect,
                        stream_id(id, uint16_t(k), 0));
    const double cross = eps_kj.next_gamma(cfg.gamma2, 1.0);
    std::vector<double> vals(r);
    for (int u = 0; u < r; ++u) {
      RandomStream xs(cfg.seed, StreamRole::unit_noise,
                      stream_id(id, uint16_t(k), uint16_t(u + 1)));
      const double x = xs.next_gamma(cfg.etas[k], 1.0);
      vals[u] = cfg.lambdas[k] * (longitudinal + cross + x);
    }
    return vals;
  });
}

RotatingPanelSample generate_noname(const NoNameModelConfig& cfg) {
  check_plan(cfg.plan);
  if (cfg.population.empty())
    throw ParseError("noname model: population must be nonempty");
  for (double x : cfg.population)
    if (!(x > 0.0))
      throw ParseError("noname model: population values must be positive");
  if (int(cfg.sigma2s.size()) != cfg.plan.num_occasions)
    throw ParseError("noname model: sigma2s length must equal num_occasions");
  if (cfg.sigma1 < 0)
    throw ParseError("noname model: sigma1 must be nonnegative");
  for (double s : cfg.sigma2s)
    if (s < 0) throw ParseError("noname model: sigma2s must be nonnegative");
  if (cfg.lambda_shape <= 0 || cfg.lambda_scale <= 0)
    throw ParseError("noname model: lambda parameters must be positive");

  const int r = cfg.plan.cluster_size;
  const size_t pop_size = cfg.population.size();
  std::vector<double> log_pop(pop_size);
  for (size_t p = 0; p < pop_size; ++p)
    log_pop[p] = std::log(cfg.population[p]);

  return build_canonical(cfg.plan, [&](int k, int id) {
    RandomStream eps_j(cfg.seed, StreamRole::longitudinal_effect,
                       stream_id(id, 0, 0));
    const double longitudinal = eps_j.next_double();
    RandomStream eps_kj(cfg.seed, StreamRole::cross_sectional_effect,
                        stream_id(id, uint16_t(k), 0));
    const double cross = eps_kj.next_double();

    // Cumulative weights b(x) = exp(sigma1*eps_j + sigma2_k*eps_kj*log x).
    // The tilt exponent is shifted by its maximum before exponentiating.
    const double tilt = cfg.sigma2s[k] * cross;
    const double base = cfg.sigma1 * longitudinal;
    double max_exponent = base + tilt * log_pop[0];
    for (size_t p = 1; p < pop_size; ++p)
      max_exponent = std::max(max_exponent, base + tilt * log_pop[p]);
    std::vector<double> cum(pop_size);
    double total = 0.0;
    for (size_t p = 0; p < pop_size; ++p) {
      total += std::exp(base + tilt * log_pop[p] - max_exponent);
      cum[p] = total;
    }

    std::vector<double> vals(r);
    for (int u = 0; u < r; ++u) {
      RandomStream draw(cfg.seed, StreamRole::weighted_draw,
                        stream_id(id, uint16_t(k), uint16_t(u + 1)));
      const double target = draw.next_double() * total;
      const size_t idx =
          std::lower_bound(cum.begin(), cum.end(), target) - cum.begin();
      RandomStream mult(cfg.seed, StreamRole::multiplier,
                        stream_id(id, uint16_t(k), uint16_t(u + 1)));
      const double lambda =
          mult.next_gamma(cfg.lambda_shape, cfg.lambda_scale);
      vals[u] = lambda * cfg.population[std::min(idx, pop_size - 1)];
    }
    return vals;
  });
}

}  // namespace rotperm

#include <string>
#include <string_view>
#include <vector>

#include "collcal/scenarios.h"

namespace collcal {

namespace {

// Settings shared by the strategic recipes.
constexpr std::string_view kStrategicBase = R"(
belief: {n_agents: 5, rho: 0.5, mu: 0.3, kappa: 5}
loss: {alpha_fn: 10, alpha_fp: 1, tau: 0.3}
dynamics: {rounds: 20, grid_lo: -0.5, grid_hi: 0.5, grid_step: 0.01, mc_samples: 2000}
)";

constexpr std::string_view kOnlineBase = R"(
belief: {n_agents: 5, rho: 0.5, mu: 0.3, kappa: 5}
loss: {alpha_fn: 10, alpha_fp: 1, tau: 0.5}
)";

struct Recipe {
  const char* body;
  std::string_view base;
};

const Recipe kRecipes[] = {
    {R"yaml(name: canonical-poa
kind: equilibrium
description: PoA, equilibrium FN and aggregate bias per mechanism at the canonical setting; VCG held at its dominant strategy
reproduces: "main PoA table: PoA, equilibrium FN and aggregate bias per mechanism at n=5, rho=0.5, mu=0.3, tau=0.3"
params: {eval_samples: 20000, vcg_dominant: true}
mechanisms: [vcg, brier, externality]
seeds: 0..9
columns: [mechanism, poa, eq_fn, truthful_fn, bias, flag]
)yaml",
     kStrategicBase},
    {R"yaml(name: corr-sweep
kind: equilibrium
description: PoA under 20-round best-response dynamics across belief correlation
reproduces: "correlation-sensitivity table: PoA per mechanism for each rho"
params: {eval_samples: 20000}
mechanisms: [vcg, brier, externality, log]
sweep: {rho: [0, 0.2, 0.5, 0.8, 0.95]}
seeds: 0..4
columns: [rho, mechanism, seed, poa, eq_fn, truthful_fn, bias, flag, delta_star]
)yaml",
     kStrategicBase},
    {R"yaml(name: agent-scaling
kind: equilibrium
description: PoA under best-response dynamics as the number of agents grows
reproduces: "agent-scaling table: PoA per mechanism for each n"
params: {eval_samples: 20000}
mechanisms: [vcg, brier, externality]
sweep: {n: [3, 5, 10, 20]}
seeds: 0..4
columns: [n, mechanism, seed, poa, eq_fn, truthful_fn, flag, delta_star]
)yaml",
     kStrategicBase},
    {R"yaml(name: observability-grid
kind: equilibrium
description: PoA and equilibrium shift as agents see none, some or all current reports
reproduces: "observability grid: PoA per k_seen level, n and rho"
params: {eval_samples: 20000}
mechanisms: [vcg, brier]
sweep: {n: [5, 10], rho: [0.2, 0.5], k_seen: [none, 1, 2, half, full]}
seeds: 0..4
columns: [n, rho, k_seen, mechanism, seed, poa, eq_fn, truthful_fn, flag, delta_star]
)yaml",
     kStrategicBase},
    {R"yaml(name: scoring-rules-poa
kind: equilibrium
description: PoA under best-response dynamics for proper scoring rules and VCG
reproduces: "scoring-rule comparison: PoA per rule over an n by rho grid"
params: {eval_samples: 20000}
mechanisms: [brier, log, spherical, brier-reg, vcg]
sweep: {n: [3, 5, 10], rho: [0, 0.2, 0.5]}
seeds: 0..4
columns: [n, rho, mechanism, seed, poa, eq_fn, truthful_fn, flag, delta_star]
)yaml",
     kStrategicBase},
    {R"yaml(name: n2-verify
kind: equilibrium
description: Two-agent equilibrium shift under Brier and VCG across base rates and correlation
reproduces: "two-agent check: simulated and closed-form shift with PoA per (mu, rho)"
params: {eval_samples: 20000}
mechanisms: [brier, vcg]
sweep: {n: [2], mu: [0.3, 0.5, 0.7], rho: [0, 0.3, 0.6, 0.9]}
seeds: 0..4
columns: [mu, rho, mechanism, seed, delta_star, theory_delta_star, poa, eq_fn, flag]
)yaml",
     kStrategicBase},
    {R"yaml(name: general-n-grid
kind: equilibrium
description: Brier equilibrium shift and FN across agent count and correlation, with the closed-form prediction
reproduces: "general-n tables: Brier shift and FN per (n, rho), simulated shift against the formula"
params: {eval_samples: 20000}
mechanisms: [brier]
sweep: {n: [2, 3, 5, 10, 20], rho: [0, 0.2, 0.5, 0.8, 0.95]}
seeds: 0..9
columns: [n, rho, seed, delta_star, theory_delta_star, n_delta_star, eq_fn, truthful_fn, poa, flag, realized_rho]
)yaml",
     kStrategicBase},
    {R"yaml(name: fixed-delta-convergence
kind: fixed-shift
description: Every agent reports b - 0.05; aggregate shift n*delta and PoA as n grows
reproduces: "fixed-shift convergence: per-agent and total shift with PoA per n"
params: {eval_samples: 20000, fixed_delta: 0.05}
mechanisms: [brier]
sweep: {n: [2, 3, 5, 10, 20, 50, 100, 200]}
seeds: 0..4
columns: [n, seed, shift, n_shift, poa, eq_fn, truthful_fn, flag]
)yaml",
     kStrategicBase},
    {R"yaml(name: threshold-sweep
kind: fixed-shift
description: FN/FP tradeoff and PoA across the decision threshold under a fixed shift of 0.05
reproduces: "threshold table: FN, FP and PoA per tau"
params: {eval_samples: 20000, fixed_delta: 0.05}
mechanisms: [brier]
sweep: {tau: [0.1, 0.3, 0.5, 0.7, 0.9]}
seeds: 0..9
columns: [tau, seed, eq_fn, eq_fp, poa, truthful_fn, flag]
)yaml",
     kStrategicBase},
    {R"yaml(name: threshold-prevalence
kind: equilibrium
description: VCG FN and the Brier-to-VCG FN ratio across threshold and prevalence
reproduces: "threshold by prevalence grid: VCG FN and the Brier/VCG FN ratio"
params: {eval_samples: 20000, vcg_dominant: true}
mechanisms: [vcg, brier]
sweep: {tau: [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9], mu: [0.01, 0.05, 0.1, 0.5]}
seeds: 0..4
columns: [tau, mu, mechanism, seed, eq_fn, fn_ratio_ref, eq_fp]
)yaml",
     kStrategicBase},
    {R"yaml(name: regret-sensitivity
kind: online-regret
description: Hedge regret against the best single agent across learning rates and horizons
reproduces: "regret sensitivity: regret and regret/sqrt(T) per learning rate and horizon"
online: {strategy: hedge, eta: theory}
params: {drift: iid, sigma_drift: 1.0, comparator_resolution: 10}
mechanisms: [vcg]
sweep: {eta: [0.01, 0.05, 0.1, 0.5, 1.0, theory], T: [100, 500, 1000]}
seeds: 0..9
columns: [eta, T, seed, eta_value, regret, regret_normalized, regret_grid, regret_bound, bound_holds]
)yaml",
     kOnlineBase},
    {R"yaml(name: drift-regret
kind: online-regret
description: Normalized Hedge regret under sudden, gradual and recurring quality drift at eta*/2, eta*, 2 eta*
reproduces: "drift regret: regret/sqrt(T) per drift kind, horizon and learning-rate scale"
online: {strategy: hedge, eta: theory}
params: {sigma_drift: 1.0, comparator_resolution: 10}
mechanisms: [vcg]
sweep: {drift: [sudden, gradual, recurring], T: [100, 500, 1000], eta_scale: [0.5, 1, 2]}
seeds: 0..9
columns: [drift, T, eta_scale, seed, regret, regret_normalized, regret_grid, regret_bound, bound_holds, fn_rate]
)yaml",
     kOnlineBase},
    {R"yaml(name: adversarial
kind: adversarial
description: FN rate when a fraction of 10 agents attack after a clean warmup that trains VCG weights
reproduces: "adversarial robustness: FN per attack type and attacker share"
belief: {n_agents: 10}
online: {strategy: window, window: 50}
params: {warmup: 1000, steps: 2000}
mechanisms: [vcg, trimmed-mean, median]
sweep: {attack: [constant-low, random-noise, label-flip], fraction: [0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6]}
seeds: 0..9
columns: [attack, fraction, mechanism, seed, adversaries, fn_rate, fp_rate, adversary_weight]
)yaml",
     kOnlineBase},
    {R"yaml(name: miscalibration
kind: miscalibration
description: FN and ECE when a share of agents is over- or underconfident (temperature scaling)
reproduces: "miscalibrated agents: FN and ECE per temperature and affected share"
online: {strategy: window, window: 50}
params: {calibration_steps: 1000, steps: 2000}
mechanisms: [vcg, brier, platt]
sweep: {temperature: [0.5, 1.5], fraction: [0, 0.2, 0.4, 0.6, 0.8]}
seeds: 0..9
columns: [temperature, fraction, mechanism, seed, fn_rate, ece, brier]
)yaml",
     kOnlineBase},
    {R"yaml(name: kloo-approx
kind: kloo
description: FN gap between k-LOO and exact leave-one-out contributions under Hedge
reproduces: "k-LOO approximation: FN gap to exact LOO per n and k"
online: {strategy: hedge, eta: theory, horizon: 2000}
params: {drift: iid, sigma_drift: 1.0}
mechanisms: [vcg]
sweep: {n: [5, 10, 20], k: [1, 2, 5, n]}
seeds: 0..9
columns: [n, k, seed, k_used, fn_exact, fn_kloo, fn_abs_diff, identical]
)yaml",
     kOnlineBase},
    {R"yaml(name: ic-verify
kind: ic-verify
description: Best grid deviation gain over truthful reporting for random profiles and others' reports
reproduces: "incentive check: violation count and largest deviation gain per mechanism"
params: {instances: 100, mc_draws: 20000, ic_tolerance: 0.003}
mechanisms: [vcg, brier]
sweep: {tau: [bayes, 0.3]}
seeds: 0..9
columns: [tau, mechanism, seed, instances, violations, max_gain, mean_gain, passed]
)yaml",
     kStrategicBase},
};

// Later keys override earlier ones; YAML forbids duplicate keys, so the base
// is merged by skipping base sections the recipe redefines.
std::string Compose(const Recipe& recipe) {
  const std::string body = recipe.body;
  std::string out;
  std::size_t pos = 0;
  const std::string base(recipe.base);
  while (pos < base.size()) {
    std::size_t end = base.find('\n', pos);
    if (end == std::string::npos) end = base.size();
    const std::string line = base.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    const std::string key = line.substr(0, line.find(':'));
    if (body.find("\n" + key + ":") == std::string::npos) out += line + "\n";
  }
  return body + out;
}

}  // namespace

const std::vector<BuiltinScenario>& builtin_scenarios() {
  static const std::vector<BuiltinScenario> list = [] {
    std::vector<BuiltinScenario> out;
    for (const auto& recipe : kRecipes) {
      std::string yaml = Compose(recipe);
      const ScenarioConfig cfg = ScenarioConfig::FromYaml(yaml);
      out.push_back({cfg.name, cfg.description, cfg.reproduces, std::move(yaml)});
    }
    return out;
  }();
  return list;
}

std::optional<ScenarioConfig> find_builtin(std::string_view name) {
  for (const auto& b : builtin_scenarios()) {
    if (b.name == name) return ScenarioConfig::FromYaml(b.yaml);
  }
  return std::nullopt;
}

}  // namespace collcal

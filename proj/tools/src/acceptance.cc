#include "collcal/tools/acceptance.h"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "collcal/core.h"
#include "collcal/metrics.h"
#include "collcal/online.h"
#include "collcal/random.h"
#include "collcal/scenarios.h"
#include "collcal/theory.h"
#include "collcal/tools/cli.h"
#include "collcal/tools/output.h"

namespace collcal::tools {

namespace {

struct Verdict {
  bool passed = false;
  std::string detail;
};

using Filter = std::vector<std::pair<std::string, std::string>>;

ScenarioResult RunBuiltin(const std::string& name, const Filter& overrides,
                          const CheckOptions& options) {
  ScenarioConfig cfg = *find_builtin(name);
  for (const auto& [key, value] : overrides) cfg.Override(key, value);
  return run_scenario(cfg, RunOptions{options.threads});
}

bool Matches(const ResultTable& t, const std::vector<FieldValue>& row, const Filter& where) {
  for (const auto& [field, text] : where) {
    if (format_csv_field(row[t.FieldIndex(field).value()]) != text) return false;
  }
  return true;
}

// Numeric values of `field` over the rows matching `where`; empty cells are
// skipped and counted in *missing.
std::vector<double> Values(const ResultTable& t, const std::string& field, const Filter& where,
                           int* missing = nullptr) {
  const std::size_t f = t.FieldIndex(field).value();
  std::vector<double> out;
  for (const auto& row : t.rows) {
    if (!Matches(t, row, where)) continue;
    const FieldValue& v = row[f];
    if (const auto* d = std::get_if<double>(&v)) {
      out.push_back(*d);
    } else if (const auto* i = std::get_if<std::int64_t>(&v)) {
      out.push_back(static_cast<double>(*i));
    } else if (const auto* b = std::get_if<bool>(&v)) {
      out.push_back(*b ? 1.0 : 0.0);
    } else if (missing != nullptr) {
      ++*missing;
    }
  }
  return out;
}

double Mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string Join(const std::vector<std::string>& parts, std::string_view sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

// 1. Brier best-response equilibrium at the canonical setting.
Verdict CanonicalPoa(const CheckOptions& options) {
  const auto r = RunBuiltin("canonical-poa", {}, options);
  const Filter brier{{"mechanism", "brier"}};
  int undefined = 0;
  const double poa = Mean(Values(r.table, "poa", brier, &undefined));
  const double bias = Mean(Values(r.table, "bias", brier));
  const double fn_truth = Mean(Values(r.table, "truthful_fn", brier));
  const double fn_eq = Mean(Values(r.table, "eq_fn", brier));
  const bool ok = undefined == 0 && bias < 0.0 && poa >= 3.0 && poa <= 15.0 && fn_truth < fn_eq;
  return {ok, fmt::format("brier over {} seeds: PoA {:.4g} (need 3..15), bias {:+.4g} (need < 0), "
                          "FN truthful {:.4g} vs equilibrium {:.4g}, undefined PoA {}",
                          Values(r.table, "seed", brier).size(), poa, bias, fn_truth, fn_eq, undefined)};
}

// 2. Externality PoA near 1 across correlation.
Verdict ExternalityPoa(const CheckOptions& options) {
  const auto r = RunBuiltin("corr-sweep", {{"mechanisms", "externality"}}, options);
  bool ok = true;
  std::vector<std::string> parts;
  for (const char* rho : {"0", "0.2", "0.5", "0.8", "0.95"}) {
    int undefined = 0;
    const double poa = Mean(Values(r.table, "poa", {{"rho", rho}}, &undefined));
    ok = ok && undefined == 0 && std::abs(poa - 1.0) <= 0.05;
    parts.push_back(fmt::format("rho {} PoA {:.4f}", rho, poa));
  }
  return {ok, Join(parts) + " (need 1 +- 0.05)"};
}

// 3. VCG dominant-strategy check at the Bayes threshold.
Verdict VcgIc(const CheckOptions& options) {
  const auto r = RunBuiltin("ic-verify", {{"tau", "bayes"}, {"mechanisms", "vcg"}, {"seeds", "0"}},
                            options);
  const double instances = Values(r.table, "instances", {}).at(0);
  const double violations = Values(r.table, "violations", {}).at(0);
  const double max_gain = Values(r.table, "max_gain", {}).at(0);
  const double tau = Values(r.table, "tau_value", {}).at(0);
  return {violations == 0.0,
          fmt::format("tau {:.4f}: {} of {} instances gain more than 0.003 by deviating, "
                      "largest gain {:.4g}",
                      tau, violations, instances, max_gain)};
}

// Regret against the best vertex, recomputed from the trace.
double DirectRegret(const OnlineTrace& trace) {
  const std::size_t n = trace.weights.cols();
  double algorithm = 0.0;
  std::vector<double> per_agent(n, 0.0);
  for (std::size_t t = 0; t < trace.size(); ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      algorithm += trace.weights(t, i) * trace.expert_losses(t, i);
      per_agent[i] += trace.expert_losses(t, i);
    }
  }
  return algorithm - *std::min_element(per_agent.begin(), per_agent.end());
}

// 4. Hedge regret bound on every stream family, plus sublinearity on iid.
Verdict RegretBound(const CheckOptions&) {
  const std::vector<std::string> families = {"iid", "alternating", "sudden", "gradual",
                                             "recurring"};
  const std::size_t n = 5;
  BeliefConfig belief;
  belief.n_agents = static_cast<int>(n);
  LossParams params;
  int runs = 0;
  int violations = 0;
  double worst_ratio = 0.0;
  double mismatch = 0.0;
  double per_step_100 = 0.0;
  double per_step_1000 = 0.0;
  for (std::size_t fam = 0; fam < families.size(); ++fam) {
    for (std::size_t horizon : {100u, 500u, 1000u}) {
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng = make_stream(seed, 0x4e67 + fam, horizon);
        AgentStream stream;
        if (families[fam] == "iid") {
          stream = iid_stream(belief, horizon, 1.0, rng);
        } else if (families[fam] == "alternating") {
          stream = alternating_stream(n, horizon);
        } else {
          stream = drift_stream({ParseDriftKind(families[fam]), 1.0}, belief, horizon, rng);
        }
        OnlineConfig cfg;
        cfg.strategy = OnlineStrategy::kHedge;
        cfg.eta = EtaSchedule::Fixed(std::sqrt(std::log(static_cast<double>(n)) /
                                               static_cast<double>(horizon)));
        cfg.horizon = static_cast<int>(horizon);
        Rng unused = make_stream(seed, 0);
        const OnlineTrace trace = run_online(stream, cfg, params, unused);
        const double regret = DirectRegret(trace);
        const double bound =
            2.0 * std::sqrt(static_cast<double>(horizon) * std::log(static_cast<double>(n)));
        mismatch = std::max(
            mismatch, std::abs(regret - compute_regret(trace, Comparator::BestSingleAgent())));
        ++runs;
        if (regret > bound) ++violations;
        worst_ratio = std::max(worst_ratio, regret / bound);
        if (families[fam] == "iid" && horizon == 100) per_step_100 += regret / 100.0 / 10.0;
        if (families[fam] == "iid" && horizon == 1000) per_step_1000 += regret / 1000.0 / 10.0;
      }
    }
  }
  const bool ok = violations == 0 && mismatch <= 1e-9 && per_step_1000 <= per_step_100;
  return {ok, fmt::format("{} runs, {} above 2 sqrt(T ln n), largest regret/bound {:.3f}; iid "
                          "regret/T {:.5f} at T=100, {:.5f} at T=1000; library vs direct "
                          "regret differ by {:.2g}",
                          runs, violations, worst_ratio, per_step_100, per_step_1000, mismatch)};
}

// 5. General-n formula against the published theory column.
Verdict Conjecture(const CheckOptions&) {
  const std::vector<std::pair<int, double>> published = {
      {2, 0.033}, {5, 0.027}, {10, 0.016}, {20, 0.009}};
  bool ok = true;
  std::vector<std::string> parts;
  for (const auto& [n, expected] : published) {
    const double value = delta_star_general(n, 0.5, 0.3);
    const double rounded = std::round(value * 1000.0) / 1000.0;
    ok = ok && std::abs(rounded - expected) < 1e-9;
    parts.push_back(fmt::format("n={} {:.5f} (published {:.3f})", n, value, expected));
  }
  return {ok, Join(parts)};
}

// 6. Underreporting at every (n, rho) and equilibrium FN rising with rho.
Verdict SignMonotonicity(const CheckOptions& options) {
  const auto r = RunBuiltin("general-n-grid", {{"n", "2,3,5,10"}, {"rho", "0.2,0.5,0.8"}},
                            options);
  int negative = 0;
  int cells = 0;
  std::vector<std::string> positive_cells;
  for (const char* n : {"2", "3", "5", "10"}) {
    for (const char* rho : {"0.2", "0.5", "0.8"}) {
      const double shift = Mean(Values(r.table, "delta_star", {{"n", n}, {"rho", rho}}));
      ++cells;
      if (shift < 0.0) {
        ++negative;
      } else {
        positive_cells.push_back(fmt::format("n={} rho={} {:+.4f}", n, rho, shift));
      }
    }
  }
  std::vector<double> fn;
  for (const char* rho : {"0.2", "0.5", "0.8"}) {
    fn.push_back(Mean(Values(r.table, "eq_fn", {{"n", "5"}, {"rho", rho}})));
  }
  const bool monotone = std::is_sorted(fn.begin(), fn.end());
  const bool ok = negative == cells && monotone;
  return {ok, fmt::format("delta* < 0 in {} of {} cells{}; n=5 equilibrium FN at rho "
                          "0.2/0.5/0.8: {:.4f}/{:.4f}/{:.4f} ({})",
                          negative, cells,
                          positive_cells.empty() ? "" : " (not: " + Join(positive_cells) + ")",
                          fn[0], fn[1], fn[2], monotone ? "nondecreasing" : "not monotone")};
}

// 7. PoA under a fixed shift across thresholds.
Verdict ThresholdInvariance(const CheckOptions& options) {
  const auto r = RunBuiltin("threshold-sweep", {}, options);
  std::vector<double> poas;
  std::vector<std::string> parts;
  int undefined = 0;
  for (const char* tau : {"0.1", "0.3", "0.5", "0.7", "0.9"}) {
    poas.push_back(Mean(Values(r.table, "poa", {{"tau", tau}}, &undefined)));
    parts.push_back(fmt::format("tau {} PoA {:.4g}", tau, poas.back()));
  }
  const auto [lo, hi] = std::minmax_element(poas.begin(), poas.end());
  const double spread = *hi / *lo - 1.0;
  return {undefined == 0 && spread <= 0.05,
          fmt::format("{}; max/min - 1 = {:.3f} (need <= 0.05)", Join(parts), spread)};
}

// 8. k-LOO against exact leave-one-out at n=10.
Verdict Kloo(const CheckOptions& options) {
  const auto r = RunBuiltin("kloo-approx", {{"n", "10"}, {"k", "2,5,n"}}, options);
  bool ok = true;
  std::vector<std::string> parts;
  for (const char* k : {"2", "5"}) {
    const auto diffs = Values(r.table, "fn_abs_diff", {{"k", k}});
    const double mean = Mean(diffs);
    ok = ok && mean <= 0.01;
    parts.push_back(fmt::format("k={} mean |dFN| {:.4f} (max seed {:.4f})", k, mean,
                                *std::max_element(diffs.begin(), diffs.end())));
  }
  const auto identical = Values(r.table, "identical", {{"k", "n"}});
  const auto same = static_cast<int>(std::count(identical.begin(), identical.end(), 1.0));
  ok = ok && same == static_cast<int>(identical.size()) && !identical.empty();
  parts.push_back(fmt::format("k=n bit-identical in {} of {} seeds", same, identical.size()));
  return {ok, Join(parts)};
}

// 9. Incremental leave-one-out aggregate against the direct renormalized sum.
Verdict LooIdentity(const CheckOptions&) {
  Rng rng = make_stream(9, 0);
  double worst = 0.0;
  const int trials = 10000;
  for (int trial = 0; trial < trials; ++trial) {
    const auto n = static_cast<std::size_t>(2 + uniform_index(rng, 19));
    std::vector<double> masses(n);
    std::vector<double> reports(n);
    for (auto& m : masses) m = -std::log(1.0 - uniform01(rng));
    for (auto& m : reports) m = uniform01(rng);
    const WeightVector w = WeightVector::Normalize(masses);
    const auto i = static_cast<std::size_t>(uniform_index(rng, n));
    double p_hat = 0.0;
    double direct_num = 0.0;
    double direct_den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      p_hat += w[j] * reports[j];
      if (j == i) continue;
      direct_num += w[j] * reports[j];
      direct_den += w[j];
    }
    const double incremental =
        loo_aggregate(Probability::Clamp(p_hat), w, ReportProfile(reports), i).value();
    worst = std::max(worst, std::abs(incremental - direct_num / direct_den));
  }
  return {worst <= 1e-12,
          fmt::format("{} random (w, m, i): largest difference {:.3g} (need <= 1e-12)", trials,
                      worst)};
}

// 10. Learned-weight VCG against the median under constant-low attackers.
Verdict Adversarial(const CheckOptions& options) {
  const auto r = RunBuiltin("adversarial",
                            {{"columns", ""},
                             {"fraction", ""},
                             {"attack", "constant-low"},
                             {"adversary_count", "1,2,3"},
                             {"mechanisms", "vcg,median"}},
                            options);
  bool ok = true;
  std::vector<std::string> parts;
  for (const char* k : {"1", "2", "3"}) {
    const double vcg = Mean(Values(r.table, "fn_rate", {{"adversary_count", k}, {"mechanism", "vcg"}}));
    const double median =
        Mean(Values(r.table, "fn_rate", {{"adversary_count", k}, {"mechanism", "median"}}));
    ok = ok && vcg <= median;
    parts.push_back(fmt::format("k={} FN vcg {:.4f} vs median {:.4f}", k, vcg, median));
  }
  return {ok, Join(parts)};
}

// 11. ECE of calibrated predictions, and its increase under temperature.
Verdict Ece(const CheckOptions&) {
  Rng rng = make_stream(11, 0);
  const std::size_t count = 1'000'000;
  std::vector<double> preds(count);
  std::vector<double> flattened(count);
  std::vector<Outcome> outcomes(count);
  for (std::size_t k = 0; k < count; ++k) {
    preds[k] = std::clamp(uniform01(rng), 1e-12, 1.0 - 1e-12);
    outcomes[k] = OutcomeFromBool(uniform01(rng) < preds[k]);
    flattened[k] = apply_temperature(Probability(preds[k]), 1.5).value();
  }
  const double calibrated = ece(preds, outcomes, 15);
  const double tempered = ece(flattened, outcomes, 15);
  return {calibrated <= 0.01 && tempered > calibrated,
          fmt::format("N=1e6, 15 bins: ECE {:.5f} calibrated (need <= 0.01), {:.5f} at T=1.5",
                      calibrated, tempered)};
}

// 12. Slower learning rate wins under a sudden quality flip.
Verdict DriftEta(const CheckOptions& options) {
  const auto r = RunBuiltin("drift-regret",
                            {{"drift", "sudden"}, {"T", "1000"}, {"eta_scale", "0.5,2"}}, options);
  const double slow = Mean(Values(r.table, "regret_normalized", {{"eta_scale", "0.5"}}));
  const double fast = Mean(Values(r.table, "regret_normalized", {{"eta_scale", "2"}}));
  return {slow <= fast,
          fmt::format("sudden drift, T=1000, 10 seeds: normalized regret {:.4f} at eta*/2, "
                      "{:.4f} at 2 eta*",
                      slow, fast)};
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 13. Two runs of the same config write byte-identical CSV.
Verdict Determinism(const CheckOptions& options) {
  const auto base = std::filesystem::temp_directory_path() /
                    fmt::format("collcal-determinism-{}", static_cast<long>(::getpid()));
  std::vector<std::string> csvs;
  for (int threads : {1, std::max(2, options.threads)}) {
    RunRequest request;
    request.scenario = "canonical-poa";
    request.out_dir = base / fmt::format("threads-{}", threads);
    request.threads = threads;
    std::ostringstream out;
    std::ostringstream err;
    if (cmd_run(request, out, err) != kExitOk) {
      std::filesystem::remove_all(base);
      return {false, "run failed: " + err.str()};
    }
    csvs.push_back(ReadFile(*request.out_dir / "results.csv"));
  }
  std::filesystem::remove_all(base);
  const bool same = csvs[0] == csvs[1] && !csvs[0].empty();
  return {same, fmt::format("canonical-poa run with 1 and 2 threads: {} bytes, {}",
                            csvs[0].size(), same ? "identical" : "different")};
}

struct Check {
  CheckInfo info;
  std::function<Verdict(const CheckOptions&)> run;
};

const std::vector<Check>& Checks() {
  static const std::vector<Check> checks = {
      {{"canonical-poa", "Brier equilibrium underreports with PoA in [3, 15]", 180},
       CanonicalPoa},
      {{"externality-poa", "Externality PoA = 1 +- 0.05 for every rho", 180}, ExternalityPoa},
      {{"vcg-ic", "VCG truthful within 0.003 of every grid deviation", 60}, VcgIc},
      {{"regret", "Hedge regret <= 2 sqrt(T ln n) on all families; regret/T shrinks", 120},
       RegretBound},
      {{"conjecture", "general-n delta* matches the published theory column", 5}, Conjecture},
      {{"sign-monotonicity", "Brier delta* < 0 for all (n, rho); FN nondecreasing in rho", 300},
       SignMonotonicity},
      {{"threshold-invariance", "fixed-shift PoA varies <= 5% across tau", 60},
       ThresholdInvariance},
      {{"kloo", "k-LOO FN within 0.01 of exact for k >= 2; k=n identical", 60}, Kloo},
      {{"loo-identity", "incremental LOO aggregate equals the direct sum to 1e-12", 5},
       LooIdentity},
      {{"adversarial", "learned-weight VCG FN <= median FN with 1-3 adversaries", 120},
       Adversarial},
      {{"ece", "ECE <= 0.01 when calibrated, larger after T=1.5", 60}, Ece},
      {{"drift-eta", "eta*/2 beats 2 eta* under sudden drift", 120}, DriftEta},
      {{"determinism", "identical config gives byte-identical CSV", 10}, Determinism},
  };
  return checks;
}

}  // namespace

const std::vector<CheckInfo>& acceptance_checks() {
  static const std::vector<CheckInfo> infos = [] {
    std::vector<CheckInfo> out;
    for (const auto& c : Checks()) out.push_back(c.info);
    return out;
  }();
  return infos;
}

CheckResult run_check(std::string_view id, const CheckOptions& options) {
  for (const auto& check : Checks()) {
    if (check.info.id != id) continue;
    CheckResult result;
    result.info = check.info;
    const auto start = std::chrono::steady_clock::now();
    Verdict verdict;
    try {
      verdict = check.run(options);
    } catch (const std::exception& e) {
      verdict = {false, fmt::format("error: {}", e.what())};
    }
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.within_budget = result.seconds <= check.info.budget_seconds;
    result.passed = verdict.passed && result.within_budget;
    result.detail = std::move(verdict.detail);
    return result;
  }
  throw InvalidArgument(fmt::format("unknown check '{}'", id));
}

std::string format_check_line(const CheckResult& result) {
  std::string budget;
  if (!result.within_budget) {
    budget = fmt::format(", over the {:.0f}s budget", result.info.budget_seconds);
  }
  return fmt::format("{}  {:<21} {}: {} ({:.1f}s{})", result.passed ? "PASS" : "FAIL",
                     result.info.id, result.info.title, result.detail, result.seconds, budget);
}

nlohmann::json check_to_json(const CheckResult& result) {
  return {{"id", result.info.id},
          {"title", result.info.title},
          {"passed", result.passed},
          {"detail", result.detail},
          {"seconds", result.seconds},
          {"budget_seconds", result.info.budget_seconds},
          {"within_budget", result.within_budget}};
}

}  // namespace collcal::tools

#include "collcal/dynamics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace collcal {
namespace {

// Sum over the batch of f(k, clamped report of agent i at shift delta).
template <typename F>
void FillCurve(const BeliefBatch& batch, std::size_t i, std::span<const double> grid,
               std::vector<double>& out, F&& utility) {
  const std::size_t count = batch.size();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double delta = grid[g];
    double sum = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      const double x = clamp01(batch.row(k)[i] - delta);
      sum += utility(k, x);
    }
    out[g] = sum / static_cast<double>(count);
  }
}

std::vector<double> OthersSum(const Matrix& reports, std::size_t i) {
  std::vector<double> sums(reports.rows());
  for (std::size_t k = 0; k < reports.rows(); ++k) {
    const auto row = reports.row(k);
    sums[k] = std::accumulate(row.begin(), row.end(), 0.0) - row[i];
  }
  return sums;
}

// Chooses k distinct agents other than i, uniformly.
std::vector<std::size_t> SampleOthers(std::size_t n, std::size_t i, std::size_t k, Rng& rng) {
  std::vector<std::size_t> pool;
  pool.reserve(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    if (j != i) pool.push_back(j);
  }
  for (std::size_t s = 0; s < k && s < pool.size(); ++s) {
    const std::size_t pick = s + uniform_index(rng, pool.size() - s);
    std::swap(pool[s], pool[pick]);
  }
  pool.resize(std::min(k, pool.size()));
  return pool;
}

void RecordRow(DynamicsTrace& trace, const BeliefBatch& batch,
               std::span<const double> deltas) {
  const std::size_t n = batch.n_agents();
  const std::size_t count = batch.size();
  std::vector<double> means(n, 0.0);
  double deviation = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const auto b = batch.row(k);
    for (std::size_t i = 0; i < n; ++i) {
      const double m = clamp01(b[i] - deltas[i]);
      means[i] += m;
      deviation += m - b[i];
    }
  }
  for (double& m : means) m /= static_cast<double>(count);
  trace.deltas.AppendRow(deltas);
  trace.mean_reports.AppendRow(means);
  trace.mean_deviation.push_back(deviation / static_cast<double>(count * n));
}

}  // namespace

std::string Observability::Name() const {
  switch (kind) {
    case ObservabilityKind::kNone: return "none";
    case ObservabilityKind::kPartial: return fmt::format("partial:{}", k_seen);
    case ObservabilityKind::kFull: return "full";
  }
  return "unknown";
}

void DynamicsConfig::Validate(int n_agents) const {
  if (rounds < 0) throw InvalidArgument(fmt::format("rounds must be >= 0 (got {})", rounds));
  if (!(grid_lo < grid_hi)) {
    throw InvalidArgument(fmt::format("grid_lo {} must be below grid_hi {}", grid_lo, grid_hi));
  }
  if (!(grid_step > 0.0)) {
    throw InvalidArgument(fmt::format("grid_step must be positive (got {})", grid_step));
  }
  if (mc_samples < 1) {
    throw InvalidArgument(fmt::format("mc_samples must be positive (got {})", mc_samples));
  }
  if (observability.kind == ObservabilityKind::kPartial &&
      (observability.k_seen < 1 || observability.k_seen > n_agents - 1)) {
    throw InvalidArgument(fmt::format("k_seen must lie in [1, {}] (got {})", n_agents - 1,
                                      observability.k_seen));
  }
}

std::vector<double> DynamicsConfig::Grid() const {
  const auto steps =
      static_cast<std::size_t>(std::floor((grid_hi - grid_lo) / grid_step + 1e-9));
  std::vector<double> grid;
  grid.reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double v = grid_lo + static_cast<double>(k) * grid_step;
    const double units = std::round(v / grid_step);
    grid.push_back(std::abs(v / grid_step - units) < 1e-6 ? units * grid_step : v);
  }
  return grid;
}

std::vector<double> DynamicsTrace::FinalShifts() const {
  if (deltas.rows() == 0) return {};
  const auto last = deltas.row(deltas.rows() - 1);
  return {last.begin(), last.end()};
}

std::string_view ToString(PoAFlag flag) {
  switch (flag) {
    case PoAFlag::kOk: return "ok";
    case PoAFlag::kUnstable: return "unstable";
    case PoAFlag::kNoPositives: return "no-positives";
  }
  return "unknown";
}

ReportProfile apply_fixed_deviation(const BeliefProfile& profile, double delta) {
  std::vector<double> m;
  m.reserve(profile.size());
  for (Probability b : profile.beliefs) m.push_back(clamp01(b.value() - delta));
  return ReportProfile(std::move(m));
}

Matrix apply_deviations(const BeliefBatch& batch, std::span<const double> deltas) {
  const std::size_t n = batch.n_agents();
  if (deltas.size() != n) throw InvalidArgument("one shift per agent required");
  Matrix reports(batch.size(), n);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto b = batch.row(k);
    auto m = reports.row(k);
    for (std::size_t i = 0; i < n; ++i) m[i] = clamp01(b[i] - deltas[i]);
  }
  return reports;
}

std::vector<double> utility_curve(std::size_t i, const MechanismSpec& mech,
                                  const BeliefBatch& batch, const Matrix& current_reports,
                                  std::span<const double> grid, const LossParams& params,
                                  double prior) {
  const std::size_t n = batch.n_agents();
  if (batch.size() == 0) throw InvalidArgument("best response on an empty batch");
  if (grid.empty()) throw InvalidArgument("best response on an empty grid");
  if (i >= n) throw InvalidArgument(fmt::format("agent index {} out of range", i));
  if (current_reports.rows() != batch.size() || current_reports.cols() != n) {
    throw InvalidArgument("current reports do not match the batch shape");
  }
  std::vector<double> curve(grid.size(), 0.0);
  const auto& outcomes = batch.outcomes();
  const double dn = static_cast<double>(n);

  switch (mech.utility.kind) {
    case UtilityKind::kNone:
      return curve;
    case UtilityKind::kBrier:
      FillCurve(batch, i, grid, curve, [&](std::size_t k, double x) {
        const double d = x - ToInt(outcomes[k]);
        return -d * d;
      });
      return curve;
    case UtilityKind::kLogScore:
    case UtilityKind::kSpherical:
    case UtilityKind::kBrierRegularized:
      FillCurve(batch, i, grid, curve, [&](std::size_t k, double x) {
        return scoring_utility(mech.utility, x, outcomes[k]);
      });
      return curve;
    case UtilityKind::kExternality: {
      const std::vector<double> others = OthersSum(current_reports, i);
      FillCurve(batch, i, grid, curve, [&](std::size_t k, double x) {
        const double gap = x - others[k] / (dn - 1.0);
        return -gap * gap;
      });
      return curve;
    }
    case UtilityKind::kVcg:
      if (mech.aggregator.kind == AggregatorKind::kLinearPool) {
        const std::vector<double> others = OthersSum(current_reports, i);
        std::vector<double> without(batch.size());
        for (std::size_t k = 0; k < batch.size(); ++k) {
          without[k] = decision_loss(others[k] / (dn - 1.0), outcomes[k], params);
        }
        FillCurve(batch, i, grid, curve, [&](std::size_t k, double x) {
          return without[k] - decision_loss((x + others[k]) / dn, outcomes[k], params);
        });
        return curve;
      }
      break;
  }

  // General path: rebuild the report vector for each evaluation.
  std::vector<double> scratch(n);
  FillCurve(batch, i, grid, curve, [&](std::size_t k, double x) {
    const auto row = current_reports.row(k);
    std::copy(row.begin(), row.end(), scratch.begin());
    scratch[i] = x;
    return agent_utility(mech, scratch, {}, outcomes[k], i, params, prior);
  });
  return curve;
}

std::size_t argmax_with_ties(std::span<const double> values, std::span<const double> grid) {
  if (values.empty() || values.size() != grid.size()) {
    throw InvalidArgument("argmax over an empty or mismatched grid");
  }
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double fa = std::abs(grid[a]), fb = std::abs(grid[b]);
    if (fa != fb) return fa < fb;
    return grid[a] < grid[b];
  });
  std::size_t best = order.front();
  for (std::size_t idx : order) {
    const double margin = 1e-12 * std::max(1.0, std::abs(values[best]));
    if (values[idx] > values[best] + margin) best = idx;
  }
  return best;
}

double best_response(std::size_t i, const MechanismSpec& mech, const BeliefBatch& batch,
                     const Matrix& current_reports, const DynamicsConfig& cfg,
                     const LossParams& params, double prior) {
  const std::vector<double> grid = cfg.Grid();
  if (grid.empty()) throw InvalidArgument("best response on an empty grid");
  if (!mech.IsStrategic()) return 0.0;
  const std::vector<double> curve =
      utility_curve(i, mech, batch, current_reports, grid, params, prior);
  return grid[argmax_with_ties(curve, grid)];
}

DynamicsTrace run_dynamics(const MechanismSpec& mech, const BeliefConfig& belief_cfg,
                           const DynamicsConfig& cfg, const LossParams& params, Rng& rng) {
  belief_cfg.Validate();
  const BeliefBatch batch =
      sample_batch(belief_cfg, static_cast<std::size_t>(cfg.mc_samples), rng);
  return run_dynamics(mech, batch, cfg, params, belief_cfg.mu, rng);
}

DynamicsTrace run_dynamics(const MechanismSpec& mech, const BeliefBatch& batch,
                           const DynamicsConfig& cfg, const LossParams& params,
                           double prior, Rng& rng) {
  const std::size_t n = batch.n_agents();
  cfg.Validate(static_cast<int>(n));
  params.Validate();

  DynamicsTrace trace;
  std::vector<double> deltas(n, 0.0);
  RecordRow(trace, batch, deltas);

  const bool sequential = cfg.order == UpdateOrder::kSequential;
  const bool random_views = cfg.observability.kind == ObservabilityKind::kPartial;
  for (int round = 1; round <= cfg.rounds; ++round) {
    const std::vector<double> previous = deltas;
    std::vector<double> next = deltas;
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double>& visible = sequential ? deltas : previous;
      std::vector<double> assumed(n, 0.0);
      switch (cfg.observability.kind) {
        case ObservabilityKind::kFull:
          assumed = visible;
          break;
        case ObservabilityKind::kNone:
          if (cfg.none_assumes_last_round) assumed = previous;
          break;
        case ObservabilityKind::kPartial:
          for (std::size_t j : SampleOthers(n, i, static_cast<std::size_t>(
                                                      cfg.observability.k_seen), rng)) {
            assumed[j] = visible[j];
          }
          break;
      }
      assumed[i] = 0.0;
      const Matrix current = apply_deviations(batch, assumed);
      const double response = best_response(i, mech, batch, current, cfg, params, prior);
      if (sequential) deltas[i] = response;
      else next[i] = response;
    }
    if (!sequential) deltas = next;
    RecordRow(trace, batch, deltas);
    trace.rounds_run = round;
    trace.converged = deltas == previous;
    if (trace.converged && !random_views) break;
  }
  if (cfg.rounds == 0) trace.converged = true;
  trace.final_delta_star = trace.mean_deviation.back();
  return trace;
}

std::vector<double> aggregate_rows(const AggregatorSpec& aggregator, const Matrix& reports,
                                   double tau) {
  std::vector<double> out(reports.rows());
  for (std::size_t k = 0; k < reports.rows(); ++k) {
    out[k] = aggregate(aggregator, reports.row(k), {}, tau);
  }
  return out;
}

PoAResult compute_poa(const AggregatorSpec& aggregator, const Matrix& eq_reports,
                      const Matrix& truthful_reports, std::span<const Outcome> outcomes,
                      const LossParams& params, std::optional<double> epsilon) {
  if (eq_reports.rows() != outcomes.size() || truthful_reports.rows() != outcomes.size()) {
    throw InvalidArgument("compute_poa: report and outcome batches differ in length");
  }
  const double tau = params.tau.value();
  const std::vector<double> p_eq = aggregate_rows(aggregator, eq_reports, tau);
  const std::vector<double> p_truth = aggregate_rows(aggregator, truthful_reports, tau);

  PoAResult r;
  r.equilibrium_counts = confusion(p_eq, outcomes, params.tau);
  r.truthful_counts = confusion(p_truth, outcomes, params.tau);

  const double count = static_cast<double>(outcomes.size());
  const double mean_eq = std::accumulate(p_eq.begin(), p_eq.end(), 0.0) / count;
  const double mean_truth = std::accumulate(p_truth.begin(), p_truth.end(), 0.0) / count;
  double rate = 0.0;
  for (Outcome y : outcomes) rate += ToInt(y);
  r.bias = mean_eq - mean_truth;
  r.bias_vs_outcome = mean_eq - rate / count;

  const std::size_t positives = r.truthful_counts.tp + r.truthful_counts.fn;
  if (positives == 0) {
    r.flag = PoAFlag::kNoPositives;
    return r;
  }
  r.fn_truthful = *r.truthful_counts.fn_rate();
  r.fn_equilibrium = *r.equilibrium_counts.fn_rate();
  const double min_rate =
      epsilon.value_or(kPoaMinTruthfulFalseNegatives / static_cast<double>(positives));
  if (r.fn_truthful < min_rate || r.fn_truthful <= 0.0) {
    r.flag = PoAFlag::kUnstable;
    return r;
  }
  r.poa = r.fn_equilibrium / r.fn_truthful;
  return r;
}

IcReport verify_ic(const MechanismSpec& mech, const BeliefConfig& belief_cfg,
                   const DynamicsConfig& cfg, const LossParams& params, int instances,
                   int mc_draws, double tolerance, Rng& rng) {
  const BeliefGenerator generator(belief_cfg);
  const auto n = static_cast<std::size_t>(belief_cfg.n_agents);
  cfg.Validate(belief_cfg.n_agents);
  if (instances < 1 || mc_draws < 1) {
    throw InvalidArgument("verify_ic needs positive instance and draw counts");
  }
  const std::vector<double> grid = cfg.Grid();

  IcReport report;
  report.instances = instances;
  std::vector<double> reports(n);
  for (int inst = 0; inst < instances; ++inst) {
    const BeliefProfile profile = generator.Sample(rng);
    const std::size_t i = uniform_index(rng, n);
    double others = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = grid[uniform_index(rng, grid.size())];
      reports[j] = clamp01(profile.beliefs[j].value() - d);
      others += reports[j];
    }
    const double b_i = profile.beliefs[i].value();
    const double posterior = (b_i + others) / static_cast<double>(n);
    std::size_t positives = 0;
    for (int d = 0; d < mc_draws; ++d) positives += uniform01(rng) < posterior ? 1 : 0;
    const double freq = static_cast<double>(positives) / mc_draws;

    // Utilities depend on the outcome draws only through their frequency.
    auto expected = [&](double report_i) {
      reports[i] = report_i;
      const double u1 =
          agent_utility(mech, reports, {}, Outcome::kPositive, i, params, belief_cfg.mu);
      const double u0 =
          agent_utility(mech, reports, {}, Outcome::kNegative, i, params, belief_cfg.mu);
      return freq * u1 + (1.0 - freq) * u0;
    };
    const double truthful = expected(b_i);
    double best = truthful;
    for (double delta : grid) best = std::max(best, expected(clamp01(b_i - delta)));
    const double gain = best - truthful;
    report.gains.push_back(gain);
    report.max_gain = std::max(report.max_gain, gain);
    report.mean_gain += gain / instances;
    if (gain > tolerance) ++report.violations;
  }
  return report;
}

}  // namespace collcal

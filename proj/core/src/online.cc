#include "collcal/online.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

namespace collcal {
namespace {

constexpr double kDegenerateWeight = 1.0 - 1e-12;
constexpr double kConfidentReport = 0.95;

double LinearPool(std::span<const double> w, std::span<const double> m) {
  double p = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) p += w[i] * m[i];
  return clamp01(p);
}

// Enumerates all weight vectors with entries in {0, 1/r, ..., 1} summing to 1.
void ForEachSimplexPoint(std::size_t n, int resolution,
                         const std::function<void(std::span<const double>)>& visit) {
  std::vector<int> counts(n, 0);
  std::vector<double> w(n, 0.0);
  std::function<void(std::size_t, int)> recurse = [&](std::size_t pos, int left) {
    if (pos + 1 == n) {
      counts[pos] = left;
      for (std::size_t i = 0; i < n; ++i) w[i] = static_cast<double>(counts[i]) / resolution;
      visit(w);
      return;
    }
    for (int c = 0; c <= left; ++c) {
      counts[pos] = c;
      recurse(pos + 1, left - c);
    }
  };
  recurse(0, resolution);
}

}  // namespace

std::string_view ToString(OnlineStrategy strategy) {
  switch (strategy) {
    case OnlineStrategy::kStatic: return "static";
    case OnlineStrategy::kHedge: return "hedge";
    case OnlineStrategy::kWindow: return "window";
    case OnlineStrategy::kEma: return "ema";
  }
  return "unknown";
}

OnlineStrategy ParseOnlineStrategy(std::string_view token) {
  if (token == "static") return OnlineStrategy::kStatic;
  if (token == "hedge") return OnlineStrategy::kHedge;
  if (token == "window") return OnlineStrategy::kWindow;
  if (token == "ema") return OnlineStrategy::kEma;
  throw InvalidArgument(
      fmt::format("unknown online strategy '{}' (expected static, hedge, window, ema)", token));
}

double EtaSchedule::Resolve(std::size_t n, std::size_t horizon) const {
  if (!theoretical) return value;
  return scale * std::sqrt(std::log(static_cast<double>(n)) / static_cast<double>(horizon));
}

std::string EtaSchedule::Name() const {
  if (!theoretical) return fmt::format("{}", value);
  if (scale == 1.0) return "theory";
  return fmt::format("theory*{}", scale);
}

void OnlineConfig::Validate(std::size_t n_agents) const {
  if (horizon < 1) throw InvalidArgument(fmt::format("horizon T must be >= 1 (got {})", horizon));
  if (window < 1) throw InvalidArgument(fmt::format("window must be >= 1 (got {})", window));
  if (!(ema_alpha > 0.0 && ema_alpha <= 1.0)) {
    throw InvalidArgument(fmt::format("ema alpha {} outside (0,1]", ema_alpha));
  }
  if (k_loo && (*k_loo < 1 || static_cast<std::size_t>(*k_loo) > n_agents)) {
    throw InvalidArgument(fmt::format("k_loo must lie in [1, {}] (got {})", n_agents, *k_loo));
  }
  const double eta_value = eta.theoretical ? eta.scale : eta.value;
  if (!(eta_value >= 0.0) || !std::isfinite(eta_value)) {
    throw InvalidArgument(fmt::format("learning rate {} is not a nonnegative number", eta_value));
  }
  if (!(prior >= 0.0 && prior <= 1.0)) {
    throw InvalidArgument(fmt::format("prior {} outside [0,1]", prior));
  }
}

Probability loo_aggregate(Probability p_hat, const WeightVector& w, const ReportProfile& m,
                          std::size_t i) {
  if (w.size() != m.size()) throw InvalidArgument("weights and reports differ in length");
  if (i >= w.size()) throw InvalidArgument(fmt::format("agent index {} out of range", i));
  const double wi = w[i];
  if (wi >= kDegenerateWeight) {
    throw InvalidArgument("leave-one-out undefined: agent holds all the weight");
  }
  return Probability::Clamp((p_hat.value() - wi * m[i].value()) / (1.0 - wi));
}

double marginal_contribution(Probability p_hat, Probability p_hat_loo, Outcome y,
                             const LossParams& params) {
  return asymmetric_loss(decide(p_hat_loo, params.tau), y, params) -
         asymmetric_loss(decide(p_hat, params.tau), y, params);
}

WeightVector hedge_update(const WeightVector& w, std::span<const double> delta, double eta) {
  if (delta.size() != w.size()) throw InvalidArgument("weights and rewards differ in length");
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] > 0.0) top = std::max(top, eta * delta[i]);
  }
  std::vector<double> mass(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    mass[i] = w[i] > 0.0 ? w[i] * std::exp(eta * delta[i] - top) : 0.0;
  }
  return WeightVector::Normalize(std::move(mass));
}

std::vector<double> exact_contributions(const WeightVector& w, const ReportProfile& m,
                                        Probability p_hat, Outcome y,
                                        const LossParams& params, double prior,
                                        int* degenerate) {
  const std::size_t n = w.size();
  if (m.size() != n) throw InvalidArgument("weights and reports differ in length");
  const double base = asymmetric_loss(decide(p_hat, params.tau), y, params);
  std::vector<double> delta(n);
  for (std::size_t i = 0; i < n; ++i) {
    double loo;
    if (w[i] >= kDegenerateWeight) {
      loo = prior;
      if (degenerate != nullptr) ++*degenerate;
    } else {
      loo = clamp01((p_hat.value() - w[i] * m[i].value()) / (1.0 - w[i]));
    }
    delta[i] = asymmetric_loss(decide(Probability(loo), params.tau), y, params) - base;
  }
  return delta;
}

std::vector<double> k_loo_contributions(const WeightVector& w, const ReportProfile& m,
                                        Probability p_hat, Outcome y,
                                        const LossParams& params, int k, Rng& rng,
                                        double prior, int* degenerate) {
  const std::size_t n = w.size();
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw InvalidArgument(fmt::format("k must lie in [1, {}] (got {})", n, k));
  }
  if (static_cast<std::size_t>(k) == n) {
    return exact_contributions(w, m, p_hat, y, params, prior, degenerate);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t s = 0; s < static_cast<std::size_t>(k); ++s) {
    std::swap(order[s], order[s + uniform_index(rng, n - s)]);
  }
  const double base = asymmetric_loss(decide(p_hat, params.tau), y, params);
  std::vector<double> delta(n, 0.0);
  std::vector<bool> sampled(n, false);
  double sum = 0.0;
  for (std::size_t s = 0; s < static_cast<std::size_t>(k); ++s) {
    const std::size_t i = order[s];
    double loo;
    if (w[i] >= kDegenerateWeight) {
      loo = prior;
      if (degenerate != nullptr) ++*degenerate;
    } else {
      loo = clamp01((p_hat.value() - w[i] * m[i].value()) / (1.0 - w[i]));
    }
    delta[i] = asymmetric_loss(decide(Probability(loo), params.tau), y, params) - base;
    sampled[i] = true;
    sum += delta[i];
  }
  const double fill = sum / k;
  for (std::size_t i = 0; i < n; ++i) {
    if (!sampled[i]) delta[i] = fill;
  }
  return delta;
}

OnlineTrace run_online(const AgentStream& stream, const OnlineConfig& cfg,
                       const LossParams& params, Rng& rng) {
  const std::size_t n = stream.n_agents();
  cfg.Validate(n);
  params.Validate();
  const auto horizon = static_cast<std::size_t>(cfg.horizon);
  if (stream.size() < horizon) {
    throw InvalidArgument(
        fmt::format("stream has {} steps but the horizon is {}", stream.size(), horizon));
  }

  OnlineTrace trace;
  trace.params = params;
  trace.eta = cfg.eta.Resolve(n, horizon);
  trace.loss_scale = params.MaxLoss() > 0.0 ? params.MaxLoss() : 1.0;
  trace.weights = Matrix(horizon, n);
  trace.reports = Matrix(horizon, n);
  trace.contributions = Matrix(horizon, n);
  trace.expert_losses = Matrix(horizon, n);
  trace.p_hat.reserve(horizon);
  trace.decisions.reserve(horizon);
  trace.outcomes.reserve(horizon);
  trace.loss.reserve(horizon);
  trace.cumulative_loss.reserve(horizon);

  WeightVector w = WeightVector::Uniform(n);
  std::deque<std::vector<double>> window;
  std::vector<double> window_sum(n, 0.0);
  std::vector<double> reward(n);
  double cumulative = 0.0;

  for (std::size_t t = 0; t < horizon; ++t) {
    const auto row = stream.reports.row(t);
    const ReportProfile m(std::vector<double>(row.begin(), row.end()));
    const Outcome y = stream.outcomes[t];
    const Probability p(LinearPool(w.values(), m.values()));
    const Decision d = decide(p, params.tau);
    const double loss = asymmetric_loss(d, y, params);

    int degenerate = 0;
    const std::vector<double> delta =
        cfg.k_loo ? k_loo_contributions(w, m, p, y, params, *cfg.k_loo, rng, cfg.prior,
                                        &degenerate)
                  : exact_contributions(w, m, p, y, params, cfg.prior, &degenerate);
    if (degenerate > 0) ++trace.degenerate_steps;

    for (std::size_t i = 0; i < n; ++i) {
      trace.weights(t, i) = w[i];
      trace.reports(t, i) = row[i];
      trace.contributions(t, i) = delta[i];
      trace.expert_losses(t, i) = 1.0 - (delta[i] + loss) / trace.loss_scale;
      reward[i] = delta[i] / trace.loss_scale;
    }
    cumulative += loss;
    trace.p_hat.push_back(p.value());
    trace.decisions.push_back(d.value());
    trace.outcomes.push_back(y);
    trace.loss.push_back(loss);
    trace.cumulative_loss.push_back(cumulative);

    switch (cfg.strategy) {
      case OnlineStrategy::kStatic:
        break;
      case OnlineStrategy::kHedge:
        w = hedge_update(w, reward, trace.eta);
        break;
      case OnlineStrategy::kEma: {
        const WeightVector step = hedge_update(w, reward, trace.eta);
        std::vector<double> mixed(n);
        for (std::size_t i = 0; i < n; ++i) {
          mixed[i] = (1.0 - cfg.ema_alpha) * w[i] + cfg.ema_alpha * step[i];
        }
        w = WeightVector::Normalize(std::move(mixed));
        break;
      }
      case OnlineStrategy::kWindow: {
        window.push_back(delta);
        for (std::size_t i = 0; i < n; ++i) window_sum[i] += delta[i];
        if (window.size() > static_cast<std::size_t>(cfg.window)) {
          for (std::size_t i = 0; i < n; ++i) window_sum[i] -= window.front()[i];
          window.pop_front();
        }
        const double low = *std::min_element(window_sum.begin(), window_sum.end());
        std::vector<double> shifted(n);
        for (std::size_t i = 0; i < n; ++i) {
          // Differences of running sums can carry tiny negative round-off.
          shifted[i] = std::max(0.0, (window_sum[i] - low) / static_cast<double>(window.size()));
        }
        w = WeightVector::Normalize(std::move(shifted));
        break;
      }
    }
  }
  trace.final_regret = compute_regret(trace, Comparator::BestSingleAgent());
  return trace;
}

double compute_regret(const OnlineTrace& trace, const Comparator& comparator,
                      RegretLoss loss) {
  const std::size_t horizon = trace.size();
  const std::size_t n = trace.weights.cols();
  if (horizon == 0) return 0.0;
  if (comparator.kind == ComparatorKind::kSimplexGrid && comparator.resolution < 1) {
    throw InvalidArgument("simplex grid resolution must be positive");
  }

  if (loss == RegretLoss::kExpert) {
    double algorithm = 0.0;
    std::vector<double> cumulative(n, 0.0);
    for (std::size_t t = 0; t < horizon; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        algorithm += trace.weights(t, i) * trace.expert_losses(t, i);
        cumulative[i] += trace.expert_losses(t, i);
      }
    }
    double best = std::numeric_limits<double>::infinity();
    if (comparator.kind == ComparatorKind::kBestSingleAgent) {
      best = *std::min_element(cumulative.begin(), cumulative.end());
    } else {
      ForEachSimplexPoint(n, comparator.resolution, [&](std::span<const double> w) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += w[i] * cumulative[i];
        best = std::min(best, total);
      });
    }
    return algorithm - best;
  }

  // Thresholded loss of the aggregate each fixed weighting would have produced.
  const LossParams& params = trace.params;
  auto fixed_total = [&](std::span<const double> w) {
    double total = 0.0;
    for (std::size_t t = 0; t < horizon; ++t) {
      total += decision_loss(LinearPool(w, trace.reports.row(t)), trace.outcomes[t], params);
    }
    return total / trace.loss_scale;
  };
  const double algorithm =
      std::accumulate(trace.loss.begin(), trace.loss.end(), 0.0) / trace.loss_scale;
  double best = std::numeric_limits<double>::infinity();
  if (comparator.kind == ComparatorKind::kBestSingleAgent) {
    std::vector<double> vertex(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      std::fill(vertex.begin(), vertex.end(), 0.0);
      vertex[i] = 1.0;
      best = std::min(best, fixed_total(vertex));
    }
  } else {
    ForEachSimplexPoint(n, comparator.resolution,
                        [&](std::span<const double> w) { best = std::min(best, fixed_total(w)); });
  }
  return algorithm - best;
}

std::string_view ToString(DriftKind kind) {
  switch (kind) {
    case DriftKind::kSuddenAtHalf: return "sudden";
    case DriftKind::kGradualLinear: return "gradual";
    case DriftKind::kRecurringQuarterPeriod: return "recurring";
  }
  return "unknown";
}

DriftKind ParseDriftKind(std::string_view token) {
  if (token == "sudden") return DriftKind::kSuddenAtHalf;
  if (token == "gradual") return DriftKind::kGradualLinear;
  if (token == "recurring") return DriftKind::kRecurringQuarterPeriod;
  throw InvalidArgument(
      fmt::format("unknown drift '{}' (expected sudden, gradual, recurring)", token));
}

std::vector<double> corruption_schedule(std::optional<DriftKind> kind, std::size_t n,
                                        std::size_t t, std::size_t horizon) {
  std::vector<double> base(n), reversed(n);
  for (std::size_t i = 0; i < n; ++i) {
    base[i] = n == 1 ? 0.5 : 0.1 + 0.8 * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  std::reverse_copy(base.begin(), base.end(), reversed.begin());
  if (!kind) return base;

  const double T = static_cast<double>(horizon);
  const double time = static_cast<double>(t);
  double mix = 0.0;  // 0: initial assignment, 1: reversed
  switch (*kind) {
    case DriftKind::kSuddenAtHalf: mix = time < T / 2.0 ? 0.0 : 1.0; break;
    case DriftKind::kGradualLinear: mix = time / T; break;
    case DriftKind::kRecurringQuarterPeriod:
      mix = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * time / (T / 4.0)));
      break;
  }
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = base[i] + (reversed[i] - base[i]) * mix;
  return q;
}

AgentStream truthful_stream(const BeliefConfig& belief_cfg, std::size_t horizon, Rng& rng) {
  BeliefBatch batch = sample_batch(belief_cfg, horizon, rng);
  return AgentStream{batch.beliefs(), batch.outcomes()};
}

namespace {

AgentStream CorruptedStream(std::optional<DriftKind> kind, const BeliefConfig& belief_cfg,
                            std::size_t horizon, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) {
    throw InvalidArgument(fmt::format("sigma_drift must be >= 0 (got {})", sigma));
  }
  AgentStream stream = truthful_stream(belief_cfg, horizon, rng);
  const std::size_t n = stream.n_agents();
  for (std::size_t t = 0; t < horizon; ++t) {
    const std::vector<double> q = corruption_schedule(kind, n, t, horizon);
    auto row = stream.reports.row(t);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = uniform01(rng);
      const double z = standard_normal(rng);
      if (u < q[i] && sigma > 0.0) row[i] = sigmoid(logit(row[i]) + sigma * z);
    }
  }
  return stream;
}

}  // namespace

AgentStream drift_stream(const DriftScenario& scenario, const BeliefConfig& belief_cfg,
                         std::size_t horizon, Rng& rng) {
  return CorruptedStream(scenario.kind, belief_cfg, horizon, scenario.sigma_drift, rng);
}

AgentStream iid_stream(const BeliefConfig& belief_cfg, std::size_t horizon,
                       double sigma_drift, Rng& rng) {
  return CorruptedStream(std::nullopt, belief_cfg, horizon, sigma_drift, rng);
}

AgentStream alternating_stream(std::size_t n, std::size_t horizon) {
  if (n < 2) throw InvalidArgument("alternating stream needs at least two agents");
  AgentStream stream{Matrix(horizon, n), std::vector<Outcome>(horizon)};
  for (std::size_t t = 0; t < horizon; ++t) {
    const bool positive = t % 2 == 0;
    stream.outcomes[t] = OutcomeFromBool(positive);
    const double right = positive ? kConfidentReport : 1.0 - kConfidentReport;
    for (std::size_t i = 0; i < n; ++i) {
      stream.reports(t, i) = i == t % n ? right : 1.0 - right;
    }
  }
  return stream;
}

}  // namespace collcal

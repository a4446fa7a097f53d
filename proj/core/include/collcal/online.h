// VCG aggregation with online weight learning: leave-one-out marginal
// contributions feed a multiplicative-weights (Hedge) update, or one of the
// static, sliding-window and EMA alternatives. Also regret accounting,
// k-LOO approximation, and synthetic report streams with quality drift.
#ifndef COLLCAL_ONLINE_H_
#define COLLCAL_ONLINE_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "collcal/beliefs.h"
#include "collcal/core.h"
#include "collcal/random.h"

namespace collcal {

enum class OnlineStrategy { kStatic, kHedge, kWindow, kEma };
std::string_view ToString(OnlineStrategy strategy);
OnlineStrategy ParseOnlineStrategy(std::string_view token);

// Either a fixed learning rate or scale * sqrt(ln n / T).
struct EtaSchedule {
  bool theoretical = true;
  double value = 0.0;  // fixed rate when !theoretical
  double scale = 1.0;  // multiplier on the theoretical rate

  static EtaSchedule Theory(double scale = 1.0) { return {true, 0.0, scale}; }
  static EtaSchedule Fixed(double eta) { return {false, eta, 1.0}; }
  double Resolve(std::size_t n, std::size_t horizon) const;
  std::string Name() const;
};

struct OnlineConfig {
  OnlineStrategy strategy = OnlineStrategy::kHedge;
  EtaSchedule eta = EtaSchedule::Theory();
  int window = 50;          // Window only
  double ema_alpha = 0.1;   // Ema only
  int horizon = 1000;       // T
  std::optional<int> k_loo; // exact leave-one-out when empty
  // Aggregate used in place of a leave-one-out aggregate when one agent
  // holds all the weight.
  double prior = 0.5;

  void Validate(std::size_t n_agents) const;
};

// Per-step agent reports and outcomes.
struct AgentStream {
  Matrix reports;  // T x n
  std::vector<Outcome> outcomes;

  std::size_t size() const { return outcomes.size(); }
  std::size_t n_agents() const { return reports.cols(); }
};

struct OnlineTrace {
  Matrix weights;        // T x n, weights in force when step t is aggregated
  Matrix reports;        // T x n
  std::vector<double> p_hat;
  std::vector<int> decisions;
  std::vector<Outcome> outcomes;
  std::vector<double> loss;             // asymmetric loss of the decision
  std::vector<double> cumulative_loss;
  Matrix contributions;  // T x n marginal contributions Delta_i (loss units)
  // T x n expert losses 1 - L(p_hat_{-i}) / loss_scale, each in [0,1]. The
  // Hedge reward Delta_i / loss_scale equals a constant minus this loss, so
  // multiplicative weights on rewards is Hedge on these losses.
  Matrix expert_losses;
  LossParams params;
  double eta = 0.0;
  double loss_scale = 1.0;  // max(alpha_fn, alpha_fp)
  int degenerate_steps = 0; // steps where some agent held all the weight
  double final_regret = 0.0;  // against the best single agent

  std::size_t size() const { return p_hat.size(); }
};

// (p_hat - w_i m_i) / (1 - w_i), clamped to [0,1]. Throws when w_i = 1.
Probability loo_aggregate(Probability p_hat, const WeightVector& w, const ReportProfile& m,
                          std::size_t i);

// loss(decide(p_hat_{-i}), y) - loss(decide(p_hat), y).
double marginal_contribution(Probability p_hat, Probability p_hat_loo, Outcome y,
                             const LossParams& params);

// w_i' proportional to w_i exp(eta delta_i), computed after subtracting the
// largest exponent.
WeightVector hedge_update(const WeightVector& w, std::span<const double> delta, double eta);

// Exact marginal contributions of all agents under the linear pool.
std::vector<double> exact_contributions(const WeightVector& w, const ReportProfile& m,
                                        Probability p_hat, Outcome y,
                                        const LossParams& params, double prior,
                                        int* degenerate = nullptr);

// Exact contributions for k agents sampled without replacement; the others
// receive the sampled mean. k = n computes all contributions exactly and
// draws nothing from rng.
std::vector<double> k_loo_contributions(const WeightVector& w, const ReportProfile& m,
                                        Probability p_hat, Outcome y,
                                        const LossParams& params, int k, Rng& rng,
                                        double prior = 0.5, int* degenerate = nullptr);

// Runs the aggregate, decide, observe, leave-one-out, update loop for
// cfg.horizon steps. rng is used only by k-LOO sampling.
OnlineTrace run_online(const AgentStream& stream, const OnlineConfig& cfg,
                       const LossParams& params, Rng& rng);

enum class ComparatorKind { kBestSingleAgent, kSimplexGrid };
struct Comparator {
  ComparatorKind kind = ComparatorKind::kBestSingleAgent;
  int resolution = 10;  // SimplexGrid: weights are multiples of 1/resolution

  static Comparator BestSingleAgent() { return {ComparatorKind::kBestSingleAgent, 0}; }
  static Comparator SimplexGrid(int resolution) {
    return {ComparatorKind::kSimplexGrid, resolution};
  }
};

enum class RegretLoss {
  // Linear loss <w, expert_losses_t>: the quantity the Hedge bound covers.
  kExpert,
  // Thresholded loss L(decide(sum_i w_i m_i), y) / loss_scale of the actual
  // aggregate; nonlinear in w and not covered by the bound.
  kDecision,
};

double compute_regret(const OnlineTrace& trace, const Comparator& comparator,
                      RegretLoss loss = RegretLoss::kExpert);

// Stream families ----------------------------------------------------------

enum class DriftKind { kSuddenAtHalf, kGradualLinear, kRecurringQuarterPeriod };
std::string_view ToString(DriftKind kind);
DriftKind ParseDriftKind(std::string_view token);

struct DriftScenario {
  DriftKind kind = DriftKind::kSuddenAtHalf;
  double sigma_drift = 1.0;
};

// Per-agent probability that the report at step t is corrupted. Agents start
// with probabilities evenly spaced on [0.1, 0.9]; the reversed assignment is
// reached at T/2 (sudden), linearly by T (gradual), or every T/4 (recurring).
std::vector<double> corruption_schedule(std::optional<DriftKind> kind, std::size_t n,
                                        std::size_t t, std::size_t horizon);

// Clean stream: beliefs from belief_cfg reported truthfully.
AgentStream truthful_stream(const BeliefConfig& belief_cfg, std::size_t horizon, Rng& rng);

// Beliefs as in truthful_stream; each report is replaced with probability
// q_i(t) by sigmoid(logit(b_i) + sigma_drift * z), z standard normal.
AgentStream drift_stream(const DriftScenario& scenario, const BeliefConfig& belief_cfg,
                         std::size_t horizon, Rng& rng);
// Same corruption with the initial (undrifted) quality assignment throughout.
AgentStream iid_stream(const BeliefConfig& belief_cfg, std::size_t horizon,
                       double sigma_drift, Rng& rng);

// Deterministic sequence: outcomes alternate 1,0,1,...; at step t agent
// (t mod n) reports confidently correct and every other agent confidently
// wrong.
AgentStream alternating_stream(std::size_t n, std::size_t horizon);

}  // namespace collcal

#endif  // COLLCAL_ONLINE_H_

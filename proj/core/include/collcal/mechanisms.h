// Agent utilities (proper scoring rules, VCG marginal contribution,
// externality) and aggregation rules (pools, robust baselines, Platt).
#ifndef COLLCAL_MECHANISMS_H_
#define COLLCAL_MECHANISMS_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "collcal/core.h"

namespace collcal {

inline constexpr double kDefaultLogClip = 1e-6;
inline constexpr double kDefaultTrimAlpha = 0.2;
inline constexpr double kDefaultRegularization = 0.01;

// ---- Utilities -----------------------------------------------------------

double brier_utility(Probability m, Outcome y);
double log_utility(Probability m, Outcome y, double clip = kDefaultLogClip);
double spherical_utility(Probability m, Outcome y);
// brier_utility - lambda (m - 1/2)^2.
double brier_regularized_utility(Probability m, Outcome y, double lambda);
// -(m_i - mean of the other reports)^2.
double externality_utility(const ReportProfile& reports, std::size_t i);

// ---- Aggregators ---------------------------------------------------------

enum class AggregatorKind {
  kLinearPool,
  kLogOddsPool,
  kTrimmedMean,
  kMedian,
  kMajorityVote,
  kPlattScaledMean,
};

// Logistic recalibration of the (weighted) mean report in logit space:
// sigmoid(a * logit(mean) + b).
struct PlattParams {
  double a = 1.0;
  double b = 0.0;
};

struct AggregatorSpec {
  AggregatorKind kind = AggregatorKind::kLinearPool;
  double trim_alpha = kDefaultTrimAlpha;  // TrimmedMean only
  double clip = kDefaultLogClip;          // LogOddsPool and PlattScaledMean
  PlattParams platt;                      // PlattScaledMean only

  void Validate() const;
  // Whether the rule consumes the weight vector (otherwise it is symmetric
  // in agents and leave-one-out simply drops the agent).
  bool UsesWeights() const;
  std::string Name() const;
};

Probability aggregate_linear(const ReportProfile& reports, const WeightVector& w);
Probability aggregate_log_odds(const ReportProfile& reports, const WeightVector& w,
                               double clip = kDefaultLogClip);
Probability aggregate_trimmed_mean(const ReportProfile& reports, double alpha);
Probability aggregate_median(const ReportProfile& reports);
// Fraction of agents with m_i > tau.
Probability aggregate_majority(const ReportProfile& reports, Probability tau);

// Maximum-likelihood Platt parameters for outcomes given mean reports,
// by damped Newton from (1, 0). Throws when only one class is present.
PlattParams platt_fit(std::span<const double> aggregates,
                      std::span<const Outcome> outcomes);
Probability platt_apply(Probability mean_report, PlattParams params,
                        double clip = kDefaultLogClip);

// Span-based evaluation used by the simulation loops. `weights` may be empty
// for rules that ignore weights; `tau` is read only by MajorityVote.
double aggregate(const AggregatorSpec& spec, std::span<const double> reports,
                 std::span<const double> weights, double tau);

// Leave-one-out aggregate with agent i removed. Weighted rules renormalize
// the remaining weights by 1/(1 - w_i); when w_i = 1 there is nothing left to
// renormalize, `prior` is returned and *degenerate (if given) is set.
double aggregate_excluding(const AggregatorSpec& spec, std::span<const double> reports,
                           std::span<const double> weights, std::size_t i, double tau,
                           double prior, bool* degenerate = nullptr);

// ---- Mechanisms ----------------------------------------------------------

enum class UtilityKind {
  kNone,  // non-strategic baseline: agents report truthfully
  kBrier,
  kLogScore,
  kSpherical,
  kBrierRegularized,
  kVcg,
  kExternality,
};

struct UtilitySpec {
  UtilityKind kind = UtilityKind::kBrier;
  double lambda = kDefaultRegularization;  // BrierRegularized only
  double clip = kDefaultLogClip;           // LogScore only
};

// A utility rule paired with the aggregation rule that produces the final
// prediction. Textual form: "utility[/aggregator]" or a bare aggregator
// (non-strategic), e.g. "brier", "vcg/median", "brier-reg:0.05",
// "trimmed-mean:0.2".
struct MechanismSpec {
  UtilitySpec utility;
  AggregatorSpec aggregator;

  static MechanismSpec Parse(std::string_view token);
  void Validate() const;
  std::string Name() const;
  bool IsStrategic() const { return utility.kind != UtilityKind::kNone; }
};

// V(m) - V(m_{-i}) where V(S) = -asymmetric_loss(decide(aggregate over S), y).
// Throws when fewer than two agents are present.
double vcg_utility(const ReportProfile& reports, const WeightVector& w, Outcome y,
                   std::size_t i, const LossParams& params,
                   const AggregatorSpec& aggregator = {}, double prior = 0.5);

// Utility of agent i under `mech` for a full report vector. Scoring rules read
// only m_i; VCG and Externality read the whole profile. kNone yields 0.
double agent_utility(const MechanismSpec& mech, std::span<const double> reports,
                     std::span<const double> weights, Outcome y, std::size_t i,
                     const LossParams& params, double prior = 0.5);

// Per-report scoring-rule utility (Brier, LogScore, Spherical,
// BrierRegularized); throws for the other kinds.
double scoring_utility(const UtilitySpec& spec, double m, Outcome y);

}  // namespace collcal

#endif  // COLLCAL_MECHANISMS_H_

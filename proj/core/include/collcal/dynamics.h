// Best-response dynamics over constant report shifts, observability
// structures, fixed-shift experiments, Price of Anarchy, and the
// dominant-strategy check for VCG.
#ifndef COLLCAL_DYNAMICS_H_
#define COLLCAL_DYNAMICS_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "collcal/beliefs.h"
#include "collcal/core.h"
#include "collcal/mechanisms.h"
#include "collcal/metrics.h"
#include "collcal/random.h"

namespace collcal {

enum class ObservabilityKind { kNone, kPartial, kFull };

struct Observability {
  ObservabilityKind kind = ObservabilityKind::kFull;
  int k_seen = 0;  // Partial only

  static Observability None() { return {ObservabilityKind::kNone, 0}; }
  static Observability Partial(int k) { return {ObservabilityKind::kPartial, k}; }
  static Observability Full() { return {ObservabilityKind::kFull, 0}; }
  std::string Name() const;
};

enum class UpdateOrder { kSequential, kSimultaneous };

struct DynamicsConfig {
  int rounds = 20;
  double grid_lo = -0.5;
  double grid_hi = 0.5;
  double grid_step = 0.01;
  int mc_samples = 2000;
  Observability observability = Observability::Full();
  UpdateOrder order = UpdateOrder::kSequential;
  // Under Observability::None, agents assume others hold their previous-round
  // shifts instead of reporting truthfully.
  bool none_assumes_last_round = false;

  void Validate(int n_agents) const;
  // Grid values; multiples of grid_step are snapped so that 0 is exact.
  std::vector<double> Grid() const;
};

struct DynamicsTrace {
  // Row r holds each agent's shift delta_i after r rounds (row 0: truthful).
  // Agent i reports clamp(b_i - delta_i).
  Matrix deltas;
  // Row r holds each agent's mean report over the batch after r rounds.
  Matrix mean_reports;
  // Per row: mean over agents and batch of the realized (m_i - b_i).
  std::vector<double> mean_deviation;
  bool converged = false;
  int rounds_run = 0;
  // Realized mean of (m_i - b_i) at the final round. Negative values mean
  // agents underreport.
  double final_delta_star = 0.0;

  std::vector<double> FinalShifts() const;
};

enum class PoAFlag { kOk, kUnstable, kNoPositives };
std::string_view ToString(PoAFlag flag);

struct PoAResult {
  double fn_truthful = 0.0;
  double fn_equilibrium = 0.0;
  std::optional<double> poa;  // empty unless flag == kOk
  PoAFlag flag = PoAFlag::kOk;
  // Mean aggregate at equilibrium minus mean aggregate under truth-telling.
  double bias = 0.0;
  // Mean aggregate at equilibrium minus the empirical outcome rate.
  double bias_vs_outcome = 0.0;
  ConfusionCounts truthful_counts;
  ConfusionCounts equilibrium_counts;
};

// Minimum number of truthful false negatives for a defined PoA.
inline constexpr int kPoaMinTruthfulFalseNegatives = 5;

// Shift applied to every belief: m_i = clamp(b_i - delta).
ReportProfile apply_fixed_deviation(const BeliefProfile& profile, double delta);
// Per-agent shifts applied across a batch; returns a batch x n report matrix.
Matrix apply_deviations(const BeliefBatch& batch, std::span<const double> deltas);

// Mean utility of agent i for every grid shift, holding the other columns of
// `current_reports` fixed. Uses the same batch (common random numbers) for
// every grid point. Weights are uniform.
std::vector<double> utility_curve(std::size_t i, const MechanismSpec& mech,
                                  const BeliefBatch& batch, const Matrix& current_reports,
                                  std::span<const double> grid, const LossParams& params,
                                  double prior);

// Grid shift maximizing agent i's mean utility; ties go to the shift nearest
// 0, then to the negative one. Non-strategic mechanisms return 0.
double best_response(std::size_t i, const MechanismSpec& mech, const BeliefBatch& batch,
                     const Matrix& current_reports, const DynamicsConfig& cfg,
                     const LossParams& params, double prior);

// Index of the preferred maximum of `values` over `grid` under the tie rule.
std::size_t argmax_with_ties(std::span<const double> values, std::span<const double> grid);

// Round-robin best responses on a batch of cfg.mc_samples profiles drawn
// from belief_cfg. rng drives the batch and Partial-observability sampling.
DynamicsTrace run_dynamics(const MechanismSpec& mech, const BeliefConfig& belief_cfg,
                           const DynamicsConfig& cfg, const LossParams& params, Rng& rng);
// Same, on a caller-supplied batch (rng only drives observability sampling).
DynamicsTrace run_dynamics(const MechanismSpec& mech, const BeliefBatch& batch,
                           const DynamicsConfig& cfg, const LossParams& params,
                           double prior, Rng& rng);

// FN-rate ratio of equilibrium to truthful reports under `aggregator`.
// `epsilon` is the minimum truthful FN rate; by default it corresponds to
// kPoaMinTruthfulFalseNegatives false negatives among the batch positives.
PoAResult compute_poa(const AggregatorSpec& aggregator, const Matrix& eq_reports,
                      const Matrix& truthful_reports, std::span<const Outcome> outcomes,
                      const LossParams& params, std::optional<double> epsilon = std::nullopt);

// Aggregates per row of a report matrix with uniform weights.
std::vector<double> aggregate_rows(const AggregatorSpec& aggregator, const Matrix& reports,
                                   double tau);

struct IcReport {
  int instances = 0;
  int violations = 0;
  double max_gain = 0.0;   // largest (best deviation utility - truthful utility)
  double mean_gain = 0.0;
  std::vector<double> gains;
};

// Dominant-strategy check. Each instance draws a belief profile, a random
// agent i, and others' reports clamp(b_j - d_j) with d_j uniform on the grid.
// Agent i evaluates each grid report by Monte Carlo over `mc_draws` outcomes
// from its own posterior y ~ Bernoulli((b_i + sum_{j != i} m_j) / n); a
// violation is a deviation beating truth by more than `tolerance`.
IcReport verify_ic(const MechanismSpec& mech, const BeliefConfig& belief_cfg,
                   const DynamicsConfig& cfg, const LossParams& params, int instances,
                   int mc_draws, double tolerance, Rng& rng);

}  // namespace collcal

#endif  // COLLCAL_DYNAMICS_H_

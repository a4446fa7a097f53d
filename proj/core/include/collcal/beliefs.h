// Correlated belief generation (Gaussian copula with Beta marginals), the
// outcome model y ~ Bernoulli(mean belief), temperature miscalibration, and
// adversarial report transforms.
#ifndef COLLCAL_BELIEFS_H_
#define COLLCAL_BELIEFS_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "collcal/core.h"
#include "collcal/random.h"

namespace collcal {

// Beliefs are kept this far inside (0,1) so logits stay finite.
inline constexpr double kBeliefFloor = 1e-12;

struct BeliefConfig {
  int n_agents = 5;
  double rho = 0.5;   // latent-space pairwise correlation
  double mu = 0.3;    // marginal mean belief and base rate
  double kappa = 5.0; // Beta concentration
  std::uint64_t seed = 0;

  void Validate() const;
  // Variance of each Beta marginal: mu(1-mu)/(kappa+1).
  double MarginalVariance() const;
};

struct BeliefProfile {
  std::vector<Probability> beliefs;
  Outcome outcome = Outcome::kNegative;

  std::size_t size() const { return beliefs.size(); }
  double MeanBelief() const;
};

// A batch of profiles stored contiguously: beliefs(k, i) is agent i's belief
// in profile k.
class BeliefBatch {
 public:
  BeliefBatch() = default;
  BeliefBatch(Matrix beliefs, std::vector<Outcome> outcomes);

  std::size_t size() const { return outcomes_.size(); }
  std::size_t n_agents() const { return beliefs_.cols(); }
  const Matrix& beliefs() const { return beliefs_; }
  const std::vector<Outcome>& outcomes() const { return outcomes_; }
  std::span<const double> row(std::size_t k) const { return beliefs_.row(k); }
  Outcome outcome(std::size_t k) const { return outcomes_[k]; }
  BeliefProfile profile(std::size_t k) const;

 private:
  Matrix beliefs_;
  std::vector<Outcome> outcomes_;
};

class BeliefGenerator {
 public:
  explicit BeliefGenerator(const BeliefConfig& cfg);

  const BeliefConfig& config() const { return cfg_; }

  // Draws one profile: shared factor g, idiosyncratic e_i, belief
  // b_i = BetaQuantile(Phi(sqrt(rho) g + sqrt(1-rho) e_i)), then y.
  BeliefProfile Sample(Rng& rng) const;
  // Same draw, written into `beliefs` (length n_agents); returns y.
  Outcome SampleInto(Rng& rng, std::span<double> beliefs) const;
  BeliefBatch SampleBatch(std::size_t count, Rng& rng) const;

  // The Beta(mu kappa, (1-mu) kappa) quantile at the normal CDF of z,
  // clamped to [kBeliefFloor, 1 - kBeliefFloor]. Evaluated from a cached
  // cubic Hermite table in logit space (absolute error below 1e-9).
  double BeliefFromLatent(double z) const;
  // Same map evaluated directly with the incomplete-beta inverse.
  double ExactBeliefFromLatent(double z) const;

  class QuantileTable;

 private:
  BeliefConfig cfg_;
  double load_shared_ = 0.0;
  double load_own_ = 0.0;
  std::shared_ptr<const QuantileTable> table_;
};

BeliefProfile sample_profile(const BeliefConfig& cfg, Rng& rng);
BeliefBatch sample_batch(const BeliefConfig& cfg, std::size_t count, Rng& rng);

// Fraction of profiles with y = 1. Throws on empty input.
double outcome_rate(std::span<const BeliefProfile> profiles);
double outcome_rate(const BeliefBatch& batch);

// sigmoid(logit(p) / temperature). Rejects p in {0,1} and temperature <= 0.
Probability apply_temperature(Probability p, double temperature);

enum class AttackStrategy { kConstantLow, kRandomNoise, kLabelFlip };

inline constexpr double kConstantLowReport = 0.01;

struct AttackSpec {
  AttackStrategy strategy = AttackStrategy::kConstantLow;
  std::vector<std::size_t> adversary_indices;

  // Indices must be distinct and below n.
  void Validate(std::size_t n) const;
};

std::string_view ToString(AttackStrategy strategy);
AttackStrategy ParseAttackStrategy(std::string_view token);

// Honest agents report their belief; adversaries report 0.01, a uniform draw,
// or 1 - b_i depending on the strategy. Only RandomNoise consumes rng.
ReportProfile apply_attack(const BeliefProfile& profile, const AttackSpec& spec,
                           Rng& rng);

// Mean pairwise Pearson correlation of beliefs across the batch; the
// realized counterpart of the latent rho.
double realized_belief_correlation(const BeliefBatch& batch);

}  // namespace collcal

#endif  // COLLCAL_BELIEFS_H_

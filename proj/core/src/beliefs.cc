#include "collcal/beliefs.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <unordered_set>
#include <utility>

#include <boost/math/special_functions/beta.hpp>
#include <fmt/format.h>

#include "collcal/metrics.h"

namespace collcal {

void BeliefConfig::Validate() const {
  if (n_agents < 2) {
    throw InvalidArgument(fmt::format("n_agents must be >= 2 (got {})", n_agents));
  }
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw InvalidArgument(fmt::format("rho must lie in [0,1) (got {})", rho));
  }
  if (!(mu > 0.0 && mu < 1.0)) {
    throw InvalidArgument(fmt::format("mu must lie in (0,1) (got {})", mu));
  }
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw InvalidArgument(fmt::format("kappa must be positive (got {})", kappa));
  }
}

double BeliefConfig::MarginalVariance() const {
  return mu * (1.0 - mu) / (kappa + 1.0);
}

double BeliefProfile::MeanBelief() const {
  double sum = 0.0;
  for (Probability b : beliefs) sum += b.value();
  return sum / static_cast<double>(beliefs.size());
}

BeliefBatch::BeliefBatch(Matrix beliefs, std::vector<Outcome> outcomes)
    : beliefs_(std::move(beliefs)), outcomes_(std::move(outcomes)) {
  if (beliefs_.rows() != outcomes_.size()) {
    throw InvalidArgument("belief batch: rows and outcomes differ in length");
  }
}

BeliefProfile BeliefBatch::profile(std::size_t k) const {
  BeliefProfile p;
  p.outcome = outcomes_.at(k);
  for (double b : beliefs_.row(k)) p.beliefs.emplace_back(b);
  return p;
}

// Beta quantile as a function of the latent normal z, tabulated in logit
// space on a uniform z grid with exact slopes (cubic Hermite). In logit space
// the map stays smooth even for U-shaped marginals, whose quantile in [0,1]
// is extremely flat near the tails.
namespace {

// Deep-tail root finding can stall; the best estimate there is far below the
// belief floor anyway.
using QuantilePolicy = boost::math::policies::policy<
    boost::math::policies::evaluation_error<boost::math::policies::ignore_error>>;

}  // namespace

class BeliefGenerator::QuantileTable {
 public:
  QuantileTable(double alpha, double beta) : alpha_(alpha), beta_(beta) {
    log_beta_fn_ = std::lgamma(alpha_) + std::lgamma(beta_) - std::lgamma(alpha_ + beta_);
    const int knots = static_cast<int>((kHi - kLo) * kPerUnit) + 1;
    logit_.resize(static_cast<std::size_t>(knots));
    slope_.resize(static_cast<std::size_t>(knots));
    for (int k = 0; k < knots; ++k) {
      const double z = kLo + static_cast<double>(k) / kPerUnit;
      const auto [b, c] = Split(z);
      const auto idx = static_cast<std::size_t>(k);
      if (b < kTail || c < kTail) {
        logit_[idx] = b < kTail ? -kLogitCap : kLogitCap;
        slope_[idx] = 0.0;
        continue;
      }
      const double lb = std::log(b), lc = std::log(c);
      logit_[idx] = lb - lc;
      const double log_phi = -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi);
      slope_[idx] = std::exp(log_phi - (alpha_ * lb + beta_ * lc - log_beta_fn_));
    }
  }

  // (b, 1 - b), each computed on the side where it is small.
  std::pair<double, double> Split(double z) const {
    if (z <= 0.0) {
      const double p = 0.5 * std::erfc(-z / std::numbers::sqrt2);
      const double b = p <= 0.0 ? 0.0 : boost::math::ibeta_inv(alpha_, beta_, p, QuantilePolicy{});
      return {b, 1.0 - b};
    }
    const double q = 0.5 * std::erfc(z / std::numbers::sqrt2);
    const double c = q <= 0.0 ? 0.0 : boost::math::ibeta_inv(beta_, alpha_, q, QuantilePolicy{});
    return {1.0 - c, c};
  }

  double Exact(double z) const { return Split(z).first; }

  double Eval(double z) const {
    if (z <= kLo || z >= kHi) return Exact(z);
    const double pos = (z - kLo) * kPerUnit;
    const auto k = static_cast<std::size_t>(pos);
    const double t = pos - static_cast<double>(k);
    const double h = 1.0 / kPerUnit;
    const double t2 = t * t, t3 = t2 * t;
    const double l = (2 * t3 - 3 * t2 + 1) * logit_[k] + (t3 - 2 * t2 + t) * h * slope_[k] +
                     (-2 * t3 + 3 * t2) * logit_[k + 1] + (t3 - t2) * h * slope_[k + 1];
    return sigmoid(l);
  }

 private:
  static constexpr double kLo = -9.0;
  static constexpr double kHi = 9.0;
  static constexpr int kPerUnit = 256;
  static constexpr double kTail = 1e-14;
  static constexpr double kLogitCap = 32.236191301916641;  // logit(1 - 1e-14)

  double alpha_;
  double beta_;
  double log_beta_fn_ = 0.0;
  std::vector<double> logit_;
  std::vector<double> slope_;
};

namespace {

std::shared_ptr<const BeliefGenerator::QuantileTable> CachedTable(double alpha, double beta) {
  static std::mutex mutex;
  static std::map<std::pair<double, double>,
                  std::shared_ptr<const BeliefGenerator::QuantileTable>> cache;
  const std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{alpha, beta}];
  if (!slot) slot = std::make_shared<const BeliefGenerator::QuantileTable>(alpha, beta);
  return slot;
}

}  // namespace

BeliefGenerator::BeliefGenerator(const BeliefConfig& cfg) : cfg_(cfg) {
  cfg_.Validate();
  load_shared_ = std::sqrt(cfg_.rho);
  load_own_ = std::sqrt(1.0 - cfg_.rho);
  table_ = CachedTable(cfg_.mu * cfg_.kappa, (1.0 - cfg_.mu) * cfg_.kappa);
}

double BeliefGenerator::BeliefFromLatent(double z) const {
  return std::clamp(table_->Eval(z), kBeliefFloor, 1.0 - kBeliefFloor);
}

double BeliefGenerator::ExactBeliefFromLatent(double z) const {
  return std::clamp(table_->Exact(z), kBeliefFloor, 1.0 - kBeliefFloor);
}

Outcome BeliefGenerator::SampleInto(Rng& rng, std::span<double> beliefs) const {
  const double g = standard_normal(rng);
  double sum = 0.0;
  for (double& b : beliefs) {
    const double z = load_shared_ * g + load_own_ * standard_normal(rng);
    b = BeliefFromLatent(z);
    sum += b;
  }
  const double mean = sum / static_cast<double>(beliefs.size());
  return OutcomeFromBool(uniform01(rng) < mean);
}

BeliefProfile BeliefGenerator::Sample(Rng& rng) const {
  std::vector<double> raw(static_cast<std::size_t>(cfg_.n_agents));
  BeliefProfile p;
  p.outcome = SampleInto(rng, raw);
  p.beliefs.reserve(raw.size());
  for (double b : raw) p.beliefs.emplace_back(b);
  return p;
}

BeliefBatch BeliefGenerator::SampleBatch(std::size_t count, Rng& rng) const {
  Matrix beliefs(count, static_cast<std::size_t>(cfg_.n_agents));
  std::vector<Outcome> outcomes(count);
  for (std::size_t k = 0; k < count; ++k) outcomes[k] = SampleInto(rng, beliefs.row(k));
  return BeliefBatch(std::move(beliefs), std::move(outcomes));
}

BeliefProfile sample_profile(const BeliefConfig& cfg, Rng& rng) {
  return BeliefGenerator(cfg).Sample(rng);
}

BeliefBatch sample_batch(const BeliefConfig& cfg, std::size_t count, Rng& rng) {
  return BeliefGenerator(cfg).SampleBatch(count, rng);
}

double outcome_rate(std::span<const BeliefProfile> profiles) {
  if (profiles.empty()) throw InvalidArgument("outcome_rate: empty input");
  std::size_t positives = 0;
  for (const BeliefProfile& p : profiles) positives += ToInt(p.outcome);
  return static_cast<double>(positives) / static_cast<double>(profiles.size());
}

double outcome_rate(const BeliefBatch& batch) {
  if (batch.size() == 0) throw InvalidArgument("outcome_rate: empty input");
  std::size_t positives = 0;
  for (Outcome y : batch.outcomes()) positives += ToInt(y);
  return static_cast<double>(positives) / static_cast<double>(batch.size());
}

Probability apply_temperature(Probability p, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidArgument(fmt::format("temperature must be positive (got {})", temperature));
  }
  if (p.value() <= 0.0 || p.value() >= 1.0) {
    throw InvalidArgument("apply_temperature: p must lie strictly inside (0,1)");
  }
  return Probability(sigmoid(logit(p.value()) / temperature));
}

void AttackSpec::Validate(std::size_t n) const {
  std::unordered_set<std::size_t> seen;
  for (std::size_t i : adversary_indices) {
    if (i >= n) throw InvalidArgument(fmt::format("adversary index {} out of range", i));
    if (!seen.insert(i).second) {
      throw InvalidArgument(fmt::format("adversary index {} repeated", i));
    }
  }
}

std::string_view ToString(AttackStrategy strategy) {
  switch (strategy) {
    case AttackStrategy::kConstantLow: return "constant-low";
    case AttackStrategy::kRandomNoise: return "random-noise";
    case AttackStrategy::kLabelFlip: return "label-flip";
  }
  return "unknown";
}

AttackStrategy ParseAttackStrategy(std::string_view token) {
  if (token == "constant-low") return AttackStrategy::kConstantLow;
  if (token == "random-noise") return AttackStrategy::kRandomNoise;
  if (token == "label-flip") return AttackStrategy::kLabelFlip;
  throw InvalidArgument(fmt::format(
      "unknown attack '{}' (expected constant-low, random-noise, label-flip)", token));
}

ReportProfile apply_attack(const BeliefProfile& profile, const AttackSpec& spec,
                           Rng& rng) {
  spec.Validate(profile.size());
  std::vector<double> m;
  m.reserve(profile.size());
  for (Probability b : profile.beliefs) m.push_back(b.value());
  for (std::size_t i : spec.adversary_indices) {
    switch (spec.strategy) {
      case AttackStrategy::kConstantLow: m[i] = kConstantLowReport; break;
      case AttackStrategy::kRandomNoise: m[i] = uniform01(rng); break;
      case AttackStrategy::kLabelFlip: m[i] = 1.0 - m[i]; break;
    }
  }
  return ReportProfile(std::move(m));
}

double realized_belief_correlation(const BeliefBatch& batch) {
  return pairwise_correlation(batch.beliefs()).value;
}

}  // namespace collcal

#include "collcal/core.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace collcal {

Probability::Probability(double value) {
  if (!std::isfinite(value) || value < -kProbabilitySlack ||
      value > 1.0 + kProbabilitySlack) {
    throw InvalidArgument(fmt::format("probability {} outside [0,1]", value));
  }
  value_ = std::clamp(value, 0.0, 1.0);
}

Probability Probability::Clamp(double value) {
  if (std::isnan(value)) throw InvalidArgument("probability is NaN");
  return Probability(std::clamp(value, 0.0, 1.0));
}

void LossParams::Validate() const {
  if (!(alpha_fn >= 0.0) || !(alpha_fp >= 0.0)) {
    throw InvalidArgument(
        fmt::format("loss costs must be nonnegative (alpha_fn={}, alpha_fp={})",
                    alpha_fn, alpha_fp));
  }
}

double LossParams::MaxLoss() const { return std::max(alpha_fn, alpha_fp); }

double LossParams::BayesThreshold() const {
  const double total = alpha_fn + alpha_fp;
  return total > 0.0 ? alpha_fp / total : 0.5;
}

Decision decide(Probability p_hat, Probability tau) {
  return Decision(p_hat.value() > tau.value());
}

double asymmetric_loss(Decision d, Outcome y, const LossParams& params) {
  if (!d.positive() && y == Outcome::kPositive) return params.alpha_fn;
  if (d.positive() && y == Outcome::kNegative) return params.alpha_fp;
  return 0.0;
}

double decision_loss(double p, Outcome y, const LossParams& params) {
  const bool positive = p > params.tau.value();
  if (!positive && y == Outcome::kPositive) return params.alpha_fn;
  if (positive && y == Outcome::kNegative) return params.alpha_fp;
  return 0.0;
}

ReportProfile::ReportProfile(std::vector<double> reports)
    : reports_(std::move(reports)) {
  for (double& m : reports_) m = Probability(m).value();
}

ReportProfile::ReportProfile(std::initializer_list<double> reports)
    : ReportProfile(std::vector<double>(reports)) {}

WeightVector::WeightVector(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty()) throw InvalidArgument("weight vector is empty");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidArgument(fmt::format("weight {} is not a nonnegative number", w));
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw InvalidArgument(fmt::format("weights sum to {} (expected 1)", sum));
  }
}

WeightVector::WeightVector(std::initializer_list<double> weights)
    : WeightVector(std::vector<double>(weights)) {}

WeightVector WeightVector::Uniform(std::size_t n) {
  if (n == 0) throw InvalidArgument("weight vector is empty");
  return WeightVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

WeightVector WeightVector::Normalize(std::vector<double> masses) {
  if (masses.empty()) throw InvalidArgument("weight vector is empty");
  double sum = 0.0;
  for (double m : masses) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw InvalidArgument(fmt::format("weight mass {} is not a nonnegative number", m));
    }
    sum += m;
  }
  if (sum <= 0.0) return Uniform(masses.size());
  for (double& m : masses) m /= sum;
  return WeightVector(std::move(masses));
}

void Matrix::AppendRow(std::span<const double> values) {
  if (rows_ == 0 && data_.empty()) cols_ = values.size();
  if (values.size() != cols_) throw InvalidArgument("matrix row width mismatch");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

}  // namespace collcal

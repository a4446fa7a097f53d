#include "collcal/metrics.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace collcal {
namespace {

void CheckPaired(std::span<const double> preds, std::span<const Outcome> outcomes,
                 const char* what) {
  if (preds.empty()) throw InvalidArgument(fmt::format("{}: empty input", what));
  if (preds.size() != outcomes.size()) {
    throw InvalidArgument(fmt::format("{}: {} predictions but {} outcomes", what,
                                      preds.size(), outcomes.size()));
  }
}

std::optional<double> Ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::optional<double> ConfusionCounts::fn_rate() const { return Ratio(fn, fn + tp); }
std::optional<double> ConfusionCounts::fp_rate() const { return Ratio(fp, fp + tn); }
std::optional<double> ConfusionCounts::recall() const { return Ratio(tp, tp + fn); }
std::optional<double> ConfusionCounts::f1() const {
  return Ratio(2 * tp, 2 * tp + fp + fn);
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
  tp += other.tp;
  fp += other.fp;
  tn += other.tn;
  fn += other.fn;
  return *this;
}

ConfusionCounts confusion(std::span<const double> preds,
                          std::span<const Outcome> outcomes, Probability tau) {
  CheckPaired(preds, outcomes, "confusion");
  ConfusionCounts c;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const bool positive = decide(Probability(preds[k]), tau).positive();
    const bool actual = outcomes[k] == Outcome::kPositive;
    if (positive && actual) ++c.tp;
    else if (positive) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

int calibration_bin(double p, int n_bins) {
  const int b = static_cast<int>(std::ceil(p * n_bins)) - 1;
  return std::clamp(b, 0, n_bins - 1);
}

std::vector<ReliabilityBin> reliability(std::span<const double> preds,
                                        std::span<const Outcome> outcomes,
                                        int n_bins) {
  CheckPaired(preds, outcomes, "reliability");
  if (n_bins < 1) throw InvalidArgument("reliability: n_bins must be positive");
  std::vector<ReliabilityBin> bins(static_cast<std::size_t>(n_bins));
  std::vector<double> sum_pred(bins.size(), 0.0);
  std::vector<std::size_t> positives(bins.size(), 0);
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const auto b = static_cast<std::size_t>(calibration_bin(preds[k], n_bins));
    ++bins[b].count;
    sum_pred[b] += preds[k];
    positives[b] += ToInt(outcomes[k]);
  }
  for (std::size_t b = 0; b < bins.size(); ++b) {
    bins[b].lo = static_cast<double>(b) / n_bins;
    bins[b].hi = static_cast<double>(b + 1) / n_bins;
    if (bins[b].count > 0) {
      const auto count = static_cast<double>(bins[b].count);
      bins[b].mean_pred = sum_pred[b] / count;
      bins[b].frac_pos = static_cast<double>(positives[b]) / count;
    }
  }
  return bins;
}

double ece(std::span<const double> preds, std::span<const Outcome> outcomes,
           int n_bins) {
  CheckPaired(preds, outcomes, "ece");
  const auto total = static_cast<double>(preds.size());
  double err = 0.0;
  for (const ReliabilityBin& bin : reliability(preds, outcomes, n_bins)) {
    if (bin.empty()) continue;
    err += static_cast<double>(bin.count) / total * std::abs(bin.frac_pos - bin.mean_pred);
  }
  return err;
}

double brier_mean(std::span<const double> preds, std::span<const Outcome> outcomes) {
  CheckPaired(preds, outcomes, "brier_mean");
  double sum = 0.0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const double d = preds[k] - ToInt(outcomes[k]);
    sum += d * d;
  }
  return sum / static_cast<double>(preds.size());
}

CorrelationResult pairwise_correlation(const Matrix& x) {
  const std::size_t n = x.rows();
  const std::size_t agents = x.cols();
  if (agents < 2) throw InvalidArgument("pairwise_correlation: need >= 2 agents");
  if (n < 2) throw InvalidArgument("pairwise_correlation: need >= 2 samples");

  std::vector<double> mean(agents, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < agents; ++i) mean[i] += x(k, i);
  }
  for (double& m : mean) m /= static_cast<double>(n);

  // Centered cross-products, accumulated once for all pairs.
  Matrix cross(agents, agents);
  for (std::size_t k = 0; k < n; ++k) {
    const auto row = x.row(k);
    for (std::size_t i = 0; i < agents; ++i) {
      const double di = row[i] - mean[i];
      for (std::size_t j = i; j < agents; ++j) cross(i, j) += di * (row[j] - mean[j]);
    }
  }

  CorrelationResult result;
  for (std::size_t i = 0; i < agents; ++i) {
    if (cross(i, i) <= 0.0) result.constant_columns.push_back(i);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < agents; ++i) {
    if (cross(i, i) <= 0.0) continue;
    for (std::size_t j = i + 1; j < agents; ++j) {
      if (cross(j, j) <= 0.0) continue;
      sum += cross(i, j) / std::sqrt(cross(i, i) * cross(j, j));
      ++result.pairs_used;
    }
  }
  result.value = result.pairs_used > 0 ? sum / static_cast<double>(result.pairs_used) : 0.0;
  return result;
}

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InvalidArgument("sorted_quantile: empty input");
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Interval bootstrap_ci(std::span<const double> diffs, int n_resamples, double level,
                      Rng& rng) {
  if (diffs.empty()) throw InvalidArgument("bootstrap_ci: empty input");
  if (n_resamples < 1) throw InvalidArgument("bootstrap_ci: n_resamples must be positive");
  if (!(level > 0.0 && level < 1.0)) {
    throw InvalidArgument(fmt::format("bootstrap_ci: level {} outside (0,1)", level));
  }
  std::vector<double> means(static_cast<std::size_t>(n_resamples));
  const std::size_t n = diffs.size();
  for (double& m : means) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += diffs[uniform_index(rng, n)];
    m = sum / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double tail = (1.0 - level) / 2.0;
  return {sorted_quantile(means, tail), sorted_quantile(means, 1.0 - tail)};
}

}  // namespace collcal

// Classification counts, calibration error, reliability bins, Brier score,
// mean pairwise correlation, and percentile bootstrap intervals.
#ifndef COLLCAL_METRICS_H_
#define COLLCAL_METRICS_H_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "collcal/core.h"
#include "collcal/random.h"

namespace collcal {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  // fn / (fn + tp); empty when there are no positives.
  std::optional<double> fn_rate() const;
  // fp / (fp + tn); empty when there are no negatives.
  std::optional<double> fp_rate() const;
  std::optional<double> recall() const;
  // 2tp / (2tp + fp + fn); empty when that denominator is zero.
  std::optional<double> f1() const;

  ConfusionCounts& operator+=(const ConfusionCounts& other);
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(std::span<const double> preds,
                          std::span<const Outcome> outcomes, Probability tau);

inline constexpr int kEceBins = 15;
inline constexpr int kReliabilityBins = 10;

// Equal-width, right-closed bins: bin 0 is [0, 1/B], bin b > 0 is
// (b/B, (b+1)/B].
int calibration_bin(double p, int n_bins);

double ece(std::span<const double> preds, std::span<const Outcome> outcomes,
           int n_bins = kEceBins);

struct ReliabilityBin {
  double lo = 0.0;
  double hi = 0.0;
  double mean_pred = 0.0;  // meaningful only when count > 0
  double frac_pos = 0.0;   // meaningful only when count > 0
  std::size_t count = 0;

  bool empty() const { return count == 0; }
};

std::vector<ReliabilityBin> reliability(std::span<const double> preds,
                                        std::span<const Outcome> outcomes,
                                        int n_bins = kReliabilityBins);

double brier_mean(std::span<const double> preds, std::span<const Outcome> outcomes);

struct CorrelationResult {
  double value = 0.0;  // mean Pearson r over pairs of nonconstant columns
  std::size_t pairs_used = 0;
  std::vector<std::size_t> constant_columns;

  bool has_constant_column() const { return !constant_columns.empty(); }
};

// Mean Pearson correlation over all unordered column pairs of a
// samples x agents matrix. Pairs involving a constant column are skipped
// and the column is reported.
CorrelationResult pairwise_correlation(const Matrix& samples_by_agent);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Percentile bootstrap interval for the mean of `diffs`.
Interval bootstrap_ci(std::span<const double> diffs, int n_resamples, double level,
                      Rng& rng);

// Linear-interpolation quantile (q in [0,1]) of an already sorted sample.
double sorted_quantile(std::span<const double> sorted, double q);

}  // namespace collcal

#endif  // COLLCAL_METRICS_H_

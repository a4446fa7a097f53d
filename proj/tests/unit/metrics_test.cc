#include "collcal/metrics.h"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "collcal/beliefs.h"

namespace collcal {
namespace {

constexpr Outcome kPos = Outcome::kPositive;
constexpr Outcome kNeg = Outcome::kNegative;

struct Calibrated {
  std::vector<double> p;
  std::vector<Outcome> y;
};

Calibrated MakeCalibrated(std::size_t count, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0);
  Calibrated c;
  c.p.reserve(count);
  c.y.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double p = uniform01(rng);
    c.p.push_back(p);
    c.y.push_back(OutcomeFromBool(uniform01(rng) < p));
  }
  return c;
}

TEST(Confusion, Examples) {
  const std::vector<double> p{0.9, 0.1};
  const std::vector<Outcome> y{kPos, kNeg};
  EXPECT_EQ(confusion(p, y, Probability(0.5)), (ConfusionCounts{1, 0, 1, 0}));
  const std::vector<double> miss{0.1};
  const std::vector<Outcome> pos{kPos};
  EXPECT_EQ(confusion(miss, pos, Probability(0.5)).fn, 1u);
  EXPECT_DOUBLE_EQ(*confusion(p, y, Probability(0.5)).fn_rate(), 0.0);
}

TEST(Confusion, UndefinedRatesAreEmpty) {
  const ConfusionCounts none{0, 3, 4, 0};
  EXPECT_FALSE(none.fn_rate().has_value());
  EXPECT_FALSE(none.recall().has_value());
  EXPECT_DOUBLE_EQ(*none.fp_rate(), 3.0 / 7.0);
  EXPECT_FALSE(ConfusionCounts{}.f1().has_value());
}

TEST(Confusion, DerivedRatesMatchRecount) {
  Rng rng = make_stream(80, 0);
  std::vector<double> p(5000);
  std::vector<Outcome> y(5000);
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = uniform01(rng);
    y[k] = OutcomeFromBool(uniform01(rng) < 0.4);
  }
  const double tau = 0.35;
  const ConfusionCounts c = confusion(p, y, Probability(tau));
  double tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const bool d = p[k] > tau, pos = y[k] == kPos;
    tp += d && pos;
    fp += d && !pos;
    tn += !d && !pos;
    fn += !d && pos;
  }
  EXPECT_EQ(c.total(), p.size());
  EXPECT_DOUBLE_EQ(*c.fn_rate(), fn / (fn + tp));
  EXPECT_DOUBLE_EQ(*c.recall(), tp / (tp + fn));
  EXPECT_DOUBLE_EQ(*c.f1(), 2 * tp / (2 * tp + fp + fn));
  EXPECT_DOUBLE_EQ(*c.fp_rate(), fp / (fp + tn));
}

TEST(CalibrationBin, RightClosedEdges) {
  EXPECT_EQ(calibration_bin(0.0, 10), 0);
  EXPECT_EQ(calibration_bin(0.1, 10), 0);
  EXPECT_EQ(calibration_bin(0.1000001, 10), 1);
  EXPECT_EQ(calibration_bin(0.95, 10), 9);
  EXPECT_EQ(calibration_bin(1.0, 10), 9);
  EXPECT_EQ(calibration_bin(0.5, 2), 0);
}

TEST(Ece, Examples) {
  const std::vector<double> ones(10, 1.0);
  const std::vector<Outcome> all_pos(10, kPos);
  EXPECT_DOUBLE_EQ(ece(ones, all_pos), 0.0);
  const std::vector<double> p07(10, 0.7);
  std::vector<Outcome> seven(10, kNeg);
  for (int k = 0; k < 7; ++k) seven[k] = kPos;
  EXPECT_NEAR(ece(p07, seven), 0.0, 1e-15);
  const std::vector<Outcome> all_neg(10, kNeg);
  EXPECT_NEAR(ece(p07, all_neg), 0.7, 1e-15);
}

TEST(Ece, WeightedByBinCount) {
  // Bin [0,0.5]: preds 0.2 x2, both negative (gap 0.2). Bin (0.5,1]: one
  // pred 0.9, positive (gap 0.1). ECE = (2 * 0.2 + 0.1) / 3.
  const std::vector<double> p{0.2, 0.2, 0.9};
  const std::vector<Outcome> y{kNeg, kNeg, kPos};
  EXPECT_NEAR(ece(p, y, 2), 0.5 / 3.0, 1e-15);
}

TEST(Ece, CalibratedDataApproachesZero) {
  const Calibrated c = MakeCalibrated(1000000, 81);
  const double e = ece(c.p, c.y, 15);
  EXPECT_GE(e, 0.0);
  EXPECT_LE(e, 0.01);
}

TEST(Ece, UnderconfidenceIncreasesError) {
  const Calibrated c = MakeCalibrated(100000, 82);
  std::vector<double> soft;
  for (double p : c.p) {
    soft.push_back(apply_temperature(Probability(std::clamp(p, 1e-9, 1 - 1e-9)), 1.5).value());
  }
  EXPECT_GT(ece(soft, c.y), ece(c.p, c.y));
}

TEST(Reliability, CalibratedBinsAgree) {
  const Calibrated c = MakeCalibrated(1000000, 83);
  const auto bins = reliability(c.p, c.y, 10);
  ASSERT_EQ(bins.size(), 10u);
  for (const ReliabilityBin& b : bins) {
    ASSERT_FALSE(b.empty());
    EXPECT_LE(std::abs(b.frac_pos - b.mean_pred), 0.02);
    EXPECT_GE(b.mean_pred, b.lo);
    EXPECT_LE(b.mean_pred, b.hi);
  }
}

TEST(Reliability, SparseInputs) {
  const std::vector<double> one{0.42};
  const std::vector<Outcome> y{kPos};
  const auto bins = reliability(one, y, 10);
  int nonempty = 0;
  for (const auto& b : bins) nonempty += b.empty() ? 0 : 1;
  EXPECT_EQ(nonempty, 1);
  EXPECT_EQ(bins[4].count, 1u);
  EXPECT_DOUBLE_EQ(bins[4].frac_pos, 1.0);

  const std::vector<double> clustered{0.71, 0.72, 0.75};
  const std::vector<Outcome> y3{kPos, kNeg, kPos};
  const auto b3 = reliability(clustered, y3, 10);
  for (std::size_t k = 0; k < b3.size(); ++k) EXPECT_EQ(b3[k].empty(), k != 7);
}

TEST(BrierMean, Examples) {
  const std::vector<double> perfect{1.0, 0.0};
  const std::vector<Outcome> y{kPos, kNeg};
  EXPECT_DOUBLE_EQ(brier_mean(perfect, y), 0.0);
  const std::vector<double> half{0.5, 0.5};
  EXPECT_DOUBLE_EQ(brier_mean(half, y), 0.25);
  const std::vector<double> p{0.3};
  const std::vector<Outcome> neg{kNeg};
  EXPECT_NEAR(brier_mean(p, neg), 0.09, 1e-15);
}

TEST(PairwiseCorrelation, Examples) {
  Rng rng = make_stream(84, 0);
  Matrix dup(1000, 2), anti(1000, 2), indep(100000, 3);
  for (std::size_t k = 0; k < 1000; ++k) {
    const double x = uniform01(rng);
    dup(k, 0) = dup(k, 1) = x;
    anti(k, 0) = x;
    anti(k, 1) = 1.0 - x;
  }
  for (std::size_t k = 0; k < indep.rows(); ++k) {
    for (std::size_t i = 0; i < 3; ++i) indep(k, i) = uniform01(rng);
  }
  EXPECT_NEAR(pairwise_correlation(dup).value, 1.0, 1e-12);
  EXPECT_NEAR(pairwise_correlation(anti).value, -1.0, 1e-12);
  const CorrelationResult r = pairwise_correlation(indep);
  EXPECT_LE(std::abs(r.value), 0.02);
  EXPECT_EQ(r.pairs_used, 3u);
}

TEST(PairwiseCorrelation, ConstantColumnIsReported) {
  Matrix m(100, 3);
  for (std::size_t k = 0; k < 100; ++k) {
    m(k, 0) = double(k);
    m(k, 1) = 0.5;
    m(k, 2) = 2.0 * double(k);
  }
  const CorrelationResult r = pairwise_correlation(m);
  EXPECT_TRUE(r.has_constant_column());
  EXPECT_EQ(r.constant_columns, std::vector<std::size_t>{1});
  EXPECT_EQ(r.pairs_used, 1u);
  EXPECT_NEAR(r.value, 1.0, 1e-12);
}

TEST(Bootstrap, ConstantData) {
  Rng rng = make_stream(85, 0);
  const std::vector<double> c(10, 0.03);
  const Interval ci = bootstrap_ci(c, 2000, 0.95, rng);
  EXPECT_NEAR(ci.lo, 0.03, 1e-15);
  EXPECT_NEAR(ci.hi, 0.03, 1e-15);
}

TEST(Bootstrap, SymmetricDataBracketsZero) {
  Rng rng = make_stream(86, 0);
  std::vector<double> d;
  for (int k = 0; k < 50; ++k) d.push_back(k % 2 == 0 ? 1.0 : -1.0);
  const Interval ci = bootstrap_ci(d, 5000, 0.95, rng);
  EXPECT_LT(ci.lo, 0.0);
  EXPECT_GT(ci.hi, 0.0);
}

TEST(Bootstrap, PositiveDiffsGivePositiveLowerBound) {
  Rng rng = make_stream(87, 0);
  const std::vector<double> d{0.021, 0.035, 0.028, 0.040, 0.025, 0.031, 0.038, 0.022, 0.033, 0.029};
  const Interval ci = bootstrap_ci(d, 5000, 0.95, rng);
  EXPECT_GT(ci.lo, 0.0);
  EXPECT_LT(ci.lo, ci.hi);
}

TEST(Bootstrap, WidthShrinksWithSampleSize) {
  Rng data = make_stream(88, 0);
  double last = 1e9;
  for (int size : {20, 200, 2000}) {
    std::vector<double> d(size);
    for (double& x : d) x = standard_normal(data);
    Rng rng = make_stream(89, size);
    const Interval ci = bootstrap_ci(d, 2000, 0.95, rng);
    EXPECT_LT(ci.hi - ci.lo, last) << size;
    last = ci.hi - ci.lo;
  }
}

TEST(SortedQuantile, Interpolates) {
  const std::vector<double> s{1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(sorted_quantile(s, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(sorted_quantile(s, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(sorted_quantile(s, 0.5), 2.5);
}

}  // namespace
}  // namespace collcal

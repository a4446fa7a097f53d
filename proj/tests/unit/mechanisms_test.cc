#include "collcal/mechanisms.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "collcal/random.h"

namespace collcal {
namespace {

constexpr Outcome kPos = Outcome::kPositive;
constexpr Outcome kNeg = Outcome::kNegative;

TEST(ScoringRules, Brier) {
  EXPECT_DOUBLE_EQ(brier_utility(Probability(1.0), kPos), 0.0);
  EXPECT_DOUBLE_EQ(brier_utility(Probability(0.0), kPos), -1.0);
  EXPECT_NEAR(brier_utility(Probability(0.3), kNeg), -0.09, 1e-15);
}

TEST(ScoringRules, Log) {
  EXPECT_NEAR(log_utility(Probability(0.5), kPos, 1e-6), std::log(0.5), 1e-15);
  EXPECT_NEAR(log_utility(Probability(1.0), kPos, 1e-6), std::log(1.0 - 1e-6), 1e-15);
  EXPECT_NEAR(log_utility(Probability(0.25), kNeg, 1e-6), std::log(0.75), 1e-15);
  EXPECT_TRUE(std::isfinite(log_utility(Probability(0.0), kPos, 1e-6)));
  EXPECT_THROW(log_utility(Probability(0.5), kPos, 0.0), InvalidArgument);
}

TEST(ScoringRules, Spherical) {
  EXPECT_NEAR(spherical_utility(Probability(1.0), kPos), 1.0, 1e-15);
  EXPECT_NEAR(spherical_utility(Probability(0.5), kPos), 0.5 / std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(spherical_utility(Probability(0.0), kPos), 0.0, 1e-15);
}

TEST(ScoringRules, BrierRegularizedAddsSymmetricPenalty) {
  for (double m : {0.1, 0.5, 0.8}) {
    EXPECT_NEAR(brier_regularized_utility(Probability(m), kPos, 0.05),
                brier_utility(Probability(m), kPos) - 0.05 * (m - 0.5) * (m - 0.5), 1e-15);
  }
}

// Expected utility under a two-point outcome distribution is maximized on a
// fine report grid exactly at the outcome probability.
class Properness : public ::testing::TestWithParam<UtilityKind> {};

TEST_P(Properness, GridArgmaxIsTruth) {
  const UtilitySpec spec{GetParam()};
  for (int qk = 1; qk < 100; qk += 7) {
    const double q = qk / 100.0;
    int best = -1;
    double best_value = -1e300;
    for (int mk = 0; mk <= 1000; ++mk) {
      const double m = mk / 1000.0;
      const double v = q * scoring_utility(spec, m, kPos) + (1 - q) * scoring_utility(spec, m, kNeg);
      if (v > best_value) {
        best_value = v;
        best = mk;
      }
    }
    EXPECT_EQ(best, qk * 10) << "q=" << q;
  }
}

INSTANTIATE_TEST_SUITE_P(Rules, Properness,
                         ::testing::Values(UtilityKind::kBrier, UtilityKind::kLogScore,
                                           UtilityKind::kSpherical));

TEST(Externality, Examples) {
  EXPECT_DOUBLE_EQ(externality_utility(ReportProfile{0.5, 0.5, 0.5}, 0), 0.0);
  EXPECT_NEAR(externality_utility(ReportProfile{0.9, 0.5, 0.5}, 0), -0.16, 1e-15);
  EXPECT_DOUBLE_EQ(externality_utility(ReportProfile{0.0, 1.0}, 0), -1.0);
  EXPECT_THROW(externality_utility(ReportProfile{0.3}, 0), InvalidArgument);
}

TEST(Vcg, PivotalAgentEarnsAvertedLoss) {
  const LossParams p{10.0, 1.0, Probability(0.3)};
  EXPECT_DOUBLE_EQ(vcg_utility(ReportProfile{0.9, 0.0}, WeightVector{0.5, 0.5}, kPos, 0, p), 10.0);
}

TEST(Vcg, NonPivotalAgentEarnsNothing) {
  const LossParams p{10.0, 1.0, Probability(0.3)};
  EXPECT_DOUBLE_EQ(
      vcg_utility(ReportProfile{0.5, 0.6, 0.7}, WeightVector::Uniform(3), kPos, 0, p), 0.0);
  EXPECT_DOUBLE_EQ(
      vcg_utility(ReportProfile{0.1, 0.1, 0.1}, WeightVector::Uniform(3), kNeg, 2, p), 0.0);
}

TEST(Vcg, RemovalTermDoesNotDependOnOwnReport) {
  // u_i + L(full) = -L(without i); the right side must not move with m_i.
  const LossParams p{10.0, 1.0, Probability(0.3)};
  Rng rng = make_stream(5, 0);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 6);
    const std::size_t i = uniform_index(rng, n);
    std::vector<double> m(n);
    for (double& x : m) x = uniform01(rng);
    const Outcome y = OutcomeFromBool(uniform01(rng) < 0.4);
    const WeightVector w = WeightVector::Uniform(n);
    std::vector<double> removal;
    for (double mi : {0.0, 0.2, 0.5, 0.9, 1.0, m[i]}) {
      m[i] = mi;
      const ReportProfile r(m);
      const double u = vcg_utility(r, w, y, i, p);
      removal.push_back(u + decision_loss(aggregate_linear(r, w).value(), y, p));
    }
    for (double v : removal) ASSERT_DOUBLE_EQ(v, removal.front());
  }
}

TEST(Vcg, AgentUtilityMatchesVcgUtility) {
  const LossParams p{10.0, 1.0, Probability(0.3)};
  const MechanismSpec mech = MechanismSpec::Parse("vcg");
  const ReportProfile m{0.2, 0.5, 0.35, 0.1};
  const WeightVector w = WeightVector::Uniform(4);
  for (std::size_t i = 0; i < 4; ++i) {
    for (Outcome y : {kNeg, kPos}) {
      EXPECT_DOUBLE_EQ(agent_utility(mech, m.values(), w.values(), y, i, p),
                       vcg_utility(m, w, y, i, p));
    }
  }
}

TEST(Aggregators, Linear) {
  EXPECT_NEAR(aggregate_linear(ReportProfile{0.2, 0.4}, WeightVector{0.5, 0.5}).value(), 0.3, 1e-15);
  EXPECT_DOUBLE_EQ(aggregate_linear(ReportProfile{0.7, 0.1}, WeightVector{1.0, 0.0}).value(), 0.7);
  EXPECT_THROW(aggregate_linear(ReportProfile{0.7, 0.1}, WeightVector::Uniform(3)), InvalidArgument);
}

TEST(Aggregators, LogOdds) {
  EXPECT_NEAR(aggregate_log_odds(ReportProfile{0.5, 0.5, 0.5}, WeightVector::Uniform(3)).value(),
              0.5, 1e-15);
  EXPECT_NEAR(aggregate_log_odds(ReportProfile{0.8, 0.1}, WeightVector{1.0, 0.0}).value(), 0.8, 1e-12);
  EXPECT_NEAR(aggregate_log_odds(ReportProfile{0.8, 0.8}, WeightVector{0.5, 0.5}).value(), 0.8, 1e-12);
}

TEST(Aggregators, TrimmedMean) {
  std::vector<double> m(10, 0.5);
  m[3] = 0.01;
  m[7] = 0.01;
  EXPECT_NEAR(aggregate_trimmed_mean(ReportProfile(m), 0.2).value(), 0.5, 1e-15);
  EXPECT_THROW(aggregate_trimmed_mean(ReportProfile(m), 0.5), InvalidArgument);
}

TEST(Aggregators, TrimmedMeanWithoutTrimmingIsLinear) {
  Rng rng = make_stream(2, 0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> m(1 + uniform_index(rng, 9));
    for (double& x : m) x = uniform01(rng);
    const ReportProfile r(m);
    EXPECT_NEAR(aggregate_trimmed_mean(r, 0.0).value(),
                aggregate_linear(r, WeightVector::Uniform(m.size())).value(), 1e-12);
  }
}

TEST(Aggregators, Median) {
  EXPECT_DOUBLE_EQ(aggregate_median(ReportProfile{0.1, 0.9, 0.5}).value(), 0.5);
  EXPECT_NEAR(aggregate_median(ReportProfile{0.2, 0.4}).value(), 0.3, 1e-15);
}

TEST(Aggregators, Majority) {
  EXPECT_NEAR(aggregate_majority(ReportProfile{0.9, 0.9, 0.1}, Probability(0.5)).value(),
              2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(aggregate_majority(ReportProfile{0.1, 0.2}, Probability(0.5)).value(), 0.0);
  EXPECT_DOUBLE_EQ(aggregate_majority(ReportProfile{0.6, 0.7}, Probability(0.5)).value(), 1.0);
  // A report exactly at the threshold does not vote positive.
  EXPECT_DOUBLE_EQ(aggregate_majority(ReportProfile{0.5}, Probability(0.5)).value(), 0.0);
}

TEST(Aggregators, ConsensusIsAFixedPoint) {
  for (double c : {0.0, 0.05, 0.3, 0.77, 1.0}) {
    const ReportProfile m(std::vector<double>(6, c));
    const WeightVector w = WeightVector::Uniform(6);
    EXPECT_NEAR(aggregate_linear(m, w).value(), c, 1e-15);
    EXPECT_NEAR(aggregate_trimmed_mean(m, 0.2).value(), c, 1e-15);
    EXPECT_NEAR(aggregate_median(m).value(), c, 1e-15);
    if (c > 1e-6 && c < 1 - 1e-6) {
      EXPECT_NEAR(aggregate_log_odds(m, w).value(), c, 1e-12);
    }
    EXPECT_DOUBLE_EQ(aggregate_majority(m, Probability(0.5)).value(), c > 0.5 ? 1.0 : 0.0);
  }
}

TEST(Aggregators, PermutationBehaviour) {
  Rng rng = make_stream(3, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 8);
    std::vector<double> m(n), mass(n);
    for (double& x : m) x = uniform01(rng);
    for (double& x : mass) x = uniform01(rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> pm(n), pmass(n);
    for (std::size_t k = 0; k < n; ++k) {
      pm[k] = m[perm[k]];
      pmass[k] = mass[perm[k]];
    }
    const ReportProfile a(m), b(pm);
    EXPECT_NEAR(aggregate_linear(a, WeightVector::Normalize(mass)).value(),
                aggregate_linear(b, WeightVector::Normalize(pmass)).value(), 1e-12);
    EXPECT_NEAR(aggregate_trimmed_mean(a, 0.2).value(), aggregate_trimmed_mean(b, 0.2).value(), 1e-12);
    EXPECT_DOUBLE_EQ(aggregate_median(a).value(), aggregate_median(b).value());
    EXPECT_DOUBLE_EQ(aggregate_majority(a, Probability(0.4)).value(),
                     aggregate_majority(b, Probability(0.4)).value());
  }
}

struct PlattData {
  std::vector<double> means;
  std::vector<Outcome> outcomes;
};

PlattData MakePlattData(double slope, std::size_t count, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0);
  PlattData d;
  for (std::size_t k = 0; k < count; ++k) {
    const double m = 0.05 + 0.9 * uniform01(rng);
    d.means.push_back(m);
    d.outcomes.push_back(OutcomeFromBool(uniform01(rng) < sigmoid(slope * logit(m))));
  }
  return d;
}

TEST(Platt, CalibratedDataGivesIdentity) {
  const PlattData d = MakePlattData(1.0, 100000, 31);
  const PlattParams fit = platt_fit(d.means, d.outcomes);
  EXPECT_NEAR(fit.a, 1.0, 0.05);
  EXPECT_NEAR(fit.b, 0.0, 0.05);
  for (int k = 10; k <= 90; ++k) {
    const double m = k / 100.0;
    EXPECT_NEAR(platt_apply(Probability(m), fit).value(), m, 0.01);
  }
}

TEST(Platt, RecoversSlope) {
  const PlattData d = MakePlattData(2.0, 100000, 32);
  const PlattParams fit = platt_fit(d.means, d.outcomes);
  EXPECT_NEAR(fit.a, 2.0, 0.1);
  EXPECT_NEAR(fit.b, 0.0, 0.1);
}

TEST(Platt, SingleClassIsAnError) {
  const std::vector<double> m{0.2, 0.4, 0.6};
  const std::vector<Outcome> y(3, kPos);
  EXPECT_THROW(platt_fit(m, y), InvalidArgument);
}

TEST(Aggregate, SpanPathMatchesTypedFunctions) {
  const std::vector<double> m{0.12, 0.5, 0.33, 0.9, 0.41};
  const ReportProfile r(m);
  const WeightVector w = WeightVector::Uniform(5);
  EXPECT_DOUBLE_EQ(aggregate(MechanismSpec::Parse("linear").aggregator, m, {}, 0.3),
                   aggregate_linear(r, w).value());
  EXPECT_DOUBLE_EQ(aggregate(MechanismSpec::Parse("median").aggregator, m, {}, 0.3),
                   aggregate_median(r).value());
  EXPECT_DOUBLE_EQ(aggregate(MechanismSpec::Parse("majority").aggregator, m, {}, 0.3),
                   aggregate_majority(r, Probability(0.3)).value());
  EXPECT_NEAR(aggregate(MechanismSpec::Parse("log-odds").aggregator, m, {}, 0.3),
              aggregate_log_odds(r, w).value(), 1e-15);
}

TEST(AggregateExcluding, RenormalizesWeights) {
  const std::vector<double> m{0.2, 0.6, 0.9};
  const std::vector<double> w{0.5, 0.25, 0.25};
  const AggregatorSpec linear;
  EXPECT_NEAR(aggregate_excluding(linear, m, w, 0, 0.5, 0.5), 0.75, 1e-15);
  bool degenerate = false;
  const std::vector<double> all_on_one{1.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(aggregate_excluding(linear, m, all_on_one, 0, 0.5, 0.3, &degenerate), 0.3);
  EXPECT_TRUE(degenerate);
}

TEST(MechanismSpec, ParsesTokens) {
  EXPECT_EQ(MechanismSpec::Parse("brier").Name(), "brier");
  EXPECT_EQ(MechanismSpec::Parse("vcg/median").Name(), "vcg/median");
  EXPECT_FALSE(MechanismSpec::Parse("trimmed-mean:0.1").IsStrategic());
  EXPECT_DOUBLE_EQ(MechanismSpec::Parse("trimmed-mean:0.1").aggregator.trim_alpha, 0.1);
  EXPECT_DOUBLE_EQ(MechanismSpec::Parse("brier-reg:0.05").utility.lambda, 0.05);
  EXPECT_THROW(MechanismSpec::Parse("conf-weighted"), InvalidArgument);
  EXPECT_THROW(MechanismSpec::Parse("brier-reg:-1"), InvalidArgument);
  EXPECT_THROW(MechanismSpec::Parse("trimmed-mean:0.5"), InvalidArgument);
  EXPECT_THROW(MechanismSpec::Parse("vcg/bogus"), InvalidArgument);
}

}  // namespace
}  // namespace collcal

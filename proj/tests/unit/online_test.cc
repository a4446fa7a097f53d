#include "collcal/online.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "collcal/theory.h"

namespace collcal {
namespace {

constexpr Outcome kPos = Outcome::kPositive;
constexpr Outcome kNeg = Outcome::kNegative;

LossParams Loss(double tau = 0.3) { return LossParams{10.0, 1.0, Probability(tau)}; }

BeliefConfig Beliefs(int n, double rho = 0.5) {
  BeliefConfig c;
  c.n_agents = n;
  c.rho = rho;
  return c;
}

OnlineConfig Online(OnlineStrategy s, int horizon, EtaSchedule eta = EtaSchedule::Theory()) {
  OnlineConfig c;
  c.strategy = s;
  c.horizon = horizon;
  c.eta = eta;
  return c;
}

TEST(LooAggregate, RemovesOneAgent) {
  const WeightVector w = WeightVector::Uniform(5);
  const ReportProfile m{0.5, 0.5, 0.5, 0.5, 1.0};
  EXPECT_NEAR(loo_aggregate(Probability(0.6), w, m, 4).value(), 0.5, 1e-15);
}

TEST(LooAggregate, ZeroWeightLeavesAggregateUnchanged) {
  const WeightVector w{0.0, 0.4, 0.6};
  const ReportProfile m{0.9, 0.2, 0.3};
  EXPECT_DOUBLE_EQ(loo_aggregate(Probability(0.26), w, m, 0).value(), 0.26);
  EXPECT_THROW(loo_aggregate(Probability(0.9), WeightVector{1.0, 0.0}, ReportProfile{0.9, 0.1}, 0),
               InvalidArgument);
}

TEST(LooAggregate, MatchesDirectRenormalizedSum) {
  Rng rng = make_stream(60, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 19);
    std::vector<double> mass(n), m(n);
    for (double& x : mass) x = uniform01(rng);
    for (double& x : m) x = uniform01(rng);
    const WeightVector w = WeightVector::Normalize(mass);
    const std::size_t i = uniform_index(rng, n);
    double p = 0.0;
    for (std::size_t j = 0; j < n; ++j) p += w[j] * m[j];
    double direct = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) direct += w[j] / (1.0 - w[i]) * m[j];
    }
    const double fast = loo_aggregate(Probability::Clamp(p), w, ReportProfile(m), i).value();
    worst = std::max(worst, std::abs(fast - direct));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(MarginalContribution, Examples) {
  const LossParams p = Loss(0.3);
  EXPECT_DOUBLE_EQ(marginal_contribution(Probability(0.5), Probability(0.1), kPos, p), 10.0);
  EXPECT_DOUBLE_EQ(marginal_contribution(Probability(0.5), Probability(0.4), kPos, p), 0.0);
  EXPECT_DOUBLE_EQ(marginal_contribution(Probability(0.5), Probability(0.1), kNeg, p), -1.0);
}

TEST(HedgeUpdate, Examples) {
  const WeightVector w{0.5, 0.5};
  const double eta = 0.7;
  const std::vector<double> delta{std::log(2.0) / eta, 0.0};
  const WeightVector next = hedge_update(w, delta, eta);
  EXPECT_NEAR(next[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(next[1], 1.0 / 3.0, 1e-12);

  const WeightVector u{0.2, 0.3, 0.5};
  const std::vector<double> same{4.0, 4.0, 4.0};
  const WeightVector a = hedge_update(u, same, 0.9);
  const std::vector<double> varied{1.0, -3.0, 7.0};
  const WeightVector b = hedge_update(u, varied, 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(a[i], u[i], 1e-15);
    EXPECT_NEAR(b[i], u[i], 1e-15);
  }
}

TEST(HedgeUpdate, SurvivesLargeExponents) {
  const WeightVector w{0.5, 0.5};
  const std::vector<double> delta{1e6, 0.0};
  const WeightVector next = hedge_update(w, delta, 1.0);
  EXPECT_DOUBLE_EQ(next[0], 1.0);
  EXPECT_DOUBLE_EQ(next[1], 0.0);
}

TEST(ExactContributions, AgreeWithPerAgentDefinition) {
  Rng rng = make_stream(61, 0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 8);
    std::vector<double> mass(n), m(n);
    for (double& x : mass) x = uniform01(rng);
    for (double& x : m) x = uniform01(rng);
    const WeightVector w = WeightVector::Normalize(mass);
    const ReportProfile r(m);
    double p = 0.0;
    for (std::size_t j = 0; j < n; ++j) p += w[j] * m[j];
    const Outcome y = OutcomeFromBool(uniform01(rng) < 0.3);
    const auto delta = exact_contributions(w, r, Probability::Clamp(p), y, Loss(), 0.5);
    for (std::size_t i = 0; i < n; ++i) {
      const Probability loo = loo_aggregate(Probability::Clamp(p), w, r, i);
      EXPECT_DOUBLE_EQ(delta[i], marginal_contribution(Probability::Clamp(p), loo, y, Loss()));
    }
  }
}

TEST(KLoo, FullSampleIsExactAndDrawsNothing) {
  Rng rng = make_stream(62, 0);
  const Rng before = rng;
  const WeightVector w{0.1, 0.2, 0.3, 0.4};
  const ReportProfile m{0.9, 0.1, 0.25, 0.4};
  const Probability p(0.1 * 0.9 + 0.2 * 0.1 + 0.3 * 0.25 + 0.4 * 0.4);
  const auto exact = exact_contributions(w, m, p, kPos, Loss(), 0.5);
  const auto approx = k_loo_contributions(w, m, p, kPos, Loss(), 4, rng);
  EXPECT_EQ(exact, approx);
  EXPECT_EQ(rng, before);
}

TEST(KLoo, IdenticalAgentsGetEqualContributions) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = make_stream(seed, 0);
    const auto d = k_loo_contributions(WeightVector{0.5, 0.5}, ReportProfile{0.4, 0.4},
                                       Probability(0.4), kPos, Loss(), 1, rng);
    EXPECT_EQ(d[0], d[1]);
  }
}

TEST(KLoo, UnsampledAgentsReceiveSampledMean) {
  const WeightVector w = WeightVector::Uniform(6);
  const ReportProfile m{0.9, 0.9, 0.1, 0.1, 0.1, 0.1};
  const Probability p(1.6 / 6.0);
  const auto exact = exact_contributions(w, m, p, kPos, Loss(0.25), 0.5);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng = make_stream(63, seed);
    const auto approx = k_loo_contributions(w, m, p, kPos, Loss(0.25), 3, rng);
    // Some 3-subset S must be exact with every other entry at the mean over S.
    bool explained = false;
    for (unsigned mask = 0; mask < 64 && !explained; ++mask) {
      if (__builtin_popcount(mask) != 3) continue;
      double mean = 0.0;
      for (std::size_t i = 0; i < 6; ++i) {
        if (mask >> i & 1u) mean += exact[i] / 3.0;
      }
      bool ok = true;
      for (std::size_t i = 0; i < 6; ++i) {
        const double want = (mask >> i & 1u) ? exact[i] : mean;
        ok = ok && std::abs(approx[i] - want) < 1e-12;
      }
      explained = ok;
    }
    EXPECT_TRUE(explained) << "seed " << seed;
  }
}

TEST(RunOnline, StaticKeepsUniformWeights) {
  Rng rng = make_stream(64, 0);
  const AgentStream stream = truthful_stream(Beliefs(4), 200, rng);
  const OnlineTrace t = run_online(stream, Online(OnlineStrategy::kStatic, 200), Loss(), rng);
  for (double w : t.weights.data()) EXPECT_DOUBLE_EQ(w, 0.25);
}

TEST(RunOnline, AlwaysCorrectAgentGainsWeightEveryStep) {
  const std::size_t n = 3, horizon = 30;
  AgentStream stream{Matrix(horizon, n), std::vector<Outcome>(horizon, kPos)};
  for (std::size_t t = 0; t < horizon; ++t) {
    stream.reports(t, 0) = 0.9;
    stream.reports(t, 1) = 0.05;
    stream.reports(t, 2) = 0.05;
  }
  Rng rng = make_stream(0, 0);
  const OnlineTrace t =
      run_online(stream, Online(OnlineStrategy::kHedge, horizon, EtaSchedule::Fixed(0.5)), Loss(), rng);
  for (std::size_t s = 1; s < horizon; ++s) {
    EXPECT_GT(t.weights(s, 0), t.weights(s - 1, 0)) << "step " << s;
  }
}

TEST(RunOnline, IdenticalAgentsStayBalanced) {
  Rng rng = make_stream(65, 0);
  const AgentStream base = truthful_stream(Beliefs(2), 300, rng);
  AgentStream stream = base;
  for (std::size_t t = 0; t < stream.size(); ++t) stream.reports(t, 1) = stream.reports(t, 0);
  for (auto strategy : {OnlineStrategy::kHedge, OnlineStrategy::kWindow, OnlineStrategy::kEma}) {
    const OnlineTrace tr = run_online(stream, Online(strategy, 300), Loss(), rng);
    for (double w : tr.weights.data()) ASSERT_DOUBLE_EQ(w, 0.5) << ToString(strategy);
  }
}

TEST(RunOnline, WeightRowsStayOnSimplex) {
  Rng rng = make_stream(66, 0);
  const AgentStream stream = iid_stream(Beliefs(5), 500, 1.0, rng);
  for (auto strategy : {OnlineStrategy::kStatic, OnlineStrategy::kHedge, OnlineStrategy::kWindow,
                        OnlineStrategy::kEma}) {
    OnlineConfig cfg = Online(strategy, 500, EtaSchedule::Fixed(1.0));
    const OnlineTrace tr = run_online(stream, cfg, Loss(), rng);
    for (std::size_t t = 0; t < tr.size(); ++t) {
      double sum = 0.0;
      for (double w : tr.weights.row(t)) {
        ASSERT_GE(w, 0.0);
        sum += w;
      }
      ASSERT_NEAR(sum, 1.0, 1e-9) << ToString(strategy) << " t=" << t;
    }
  }
}

TEST(RunOnline, WindowWeightsFollowRecentContributions) {
  Rng rng = make_stream(67, 0);
  const AgentStream stream = iid_stream(Beliefs(4), 60, 1.5, rng);
  OnlineConfig cfg = Online(OnlineStrategy::kWindow, 60);
  cfg.window = 5;
  const OnlineTrace tr = run_online(stream, cfg, Loss(), rng);
  for (std::size_t t = 1; t < tr.size(); ++t) {
    const std::size_t from = t >= 5 ? t - 5 : 0;
    std::vector<double> mean(4, 0.0);
    for (std::size_t s = from; s < t; ++s) {
      for (std::size_t i = 0; i < 4; ++i) mean[i] += tr.contributions(s, i) / double(t - from);
    }
    const double low = *std::min_element(mean.begin(), mean.end());
    double total = 0.0;
    for (double& v : mean) total += (v -= low);
    for (std::size_t i = 0; i < 4; ++i) {
      const double expected = total > 0.0 ? mean[i] / total : 0.25;
      EXPECT_NEAR(tr.weights(t, i), expected, 1e-9) << "t=" << t;
    }
  }
}

TEST(RunOnline, EmaMixesTowardHedgeStep) {
  Rng rng = make_stream(68, 0);
  const AgentStream stream = iid_stream(Beliefs(3), 40, 1.5, rng);
  OnlineConfig cfg = Online(OnlineStrategy::kEma, 40, EtaSchedule::Fixed(0.8));
  cfg.ema_alpha = 0.3;
  const OnlineTrace tr = run_online(stream, cfg, Loss(), rng);
  for (std::size_t t = 0; t + 1 < tr.size(); ++t) {
    std::vector<double> step(3);
    double z = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      step[i] = tr.weights(t, i) * std::exp(0.8 * tr.contributions(t, i) / 10.0);
      z += step[i];
    }
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_NEAR(tr.weights(t + 1, i), 0.7 * tr.weights(t, i) + 0.3 * step[i] / z, 1e-12);
    }
  }
}

TEST(RunOnline, ExpertLossesAreScaledLeaveOneOutLosses) {
  Rng rng = make_stream(69, 0);
  const AgentStream stream = iid_stream(Beliefs(5), 200, 1.0, rng);
  const OnlineTrace tr = run_online(stream, Online(OnlineStrategy::kHedge, 200), Loss(), rng);
  for (std::size_t t = 0; t < tr.size(); ++t) {
    const auto w = tr.weights.row(t);
    const auto m = tr.reports.row(t);
    for (std::size_t i = 0; i < 5; ++i) {
      double rest = 0.0;
      for (std::size_t j = 0; j < 5; ++j) {
        if (j != i) rest += w[j] * m[j];
      }
      const double loo = std::clamp(rest / (1.0 - w[i]), 0.0, 1.0);
      const double expected = 1.0 - decision_loss(loo, tr.outcomes[t], Loss()) / 10.0;
      ASSERT_NEAR(tr.expert_losses(t, i), expected, 1e-9);
      ASSERT_GE(tr.expert_losses(t, i), 0.0);
      ASSERT_LE(tr.expert_losses(t, i), 1.0);
    }
  }
}

TEST(RunOnline, RejectsShortStream) {
  Rng rng = make_stream(70, 0);
  const AgentStream stream = truthful_stream(Beliefs(3), 10, rng);
  EXPECT_THROW(run_online(stream, Online(OnlineStrategy::kHedge, 20), Loss(), rng), InvalidArgument);
}

TEST(Regret, ZeroWhenEveryExpertIsTheSame) {
  Rng rng = make_stream(71, 0);
  AgentStream stream = truthful_stream(Beliefs(3), 100, rng);
  for (std::size_t t = 0; t < stream.size(); ++t) {
    stream.reports(t, 1) = stream.reports(t, 2) = stream.reports(t, 0);
  }
  const OnlineTrace tr = run_online(stream, Online(OnlineStrategy::kHedge, 100), Loss(), rng);
  EXPECT_NEAR(compute_regret(tr, Comparator::BestSingleAgent()), 0.0, 1e-9);
  EXPECT_NEAR(compute_regret(tr, Comparator::BestSingleAgent(), RegretLoss::kDecision), 0.0, 1e-9);
}

TEST(Regret, GridComparatorIsAtLeastAsStrongAsVertices) {
  Rng rng = make_stream(72, 0);
  const AgentStream stream = iid_stream(Beliefs(3), 300, 1.5, rng);
  const OnlineTrace tr = run_online(stream, Online(OnlineStrategy::kHedge, 300), Loss(), rng);
  for (RegretLoss loss : {RegretLoss::kExpert, RegretLoss::kDecision}) {
    EXPECT_GE(compute_regret(tr, Comparator::SimplexGrid(10), loss) + 1e-9,
              compute_regret(tr, Comparator::BestSingleAgent(), loss));
  }
  EXPECT_NEAR(compute_regret(tr, Comparator::SimplexGrid(10)),
              compute_regret(tr, Comparator::BestSingleAgent()), 1e-9);
}

TEST(Regret, AlternatingSequenceWithinBound) {
  const AgentStream stream = alternating_stream(5, 100);
  Rng rng = make_stream(0, 0);
  const OnlineConfig cfg = Online(OnlineStrategy::kHedge, 100, EtaSchedule::Fixed(std::sqrt(std::log(5.0) / 100.0)));
  const OnlineTrace tr = run_online(stream, cfg, Loss(), rng);
  const double bound = 2.0 * std::sqrt(100.0 * std::log(5.0));
  EXPECT_NEAR(bound, 25.37, 0.005);
  EXPECT_LE(compute_regret(tr, Comparator::BestSingleAgent()), bound);
  EXPECT_DOUBLE_EQ(tr.final_regret, compute_regret(tr, Comparator::BestSingleAgent()));
}

TEST(Regret, BoundHoldsAcrossStreamFamiliesAndHorizons) {
  for (std::size_t horizon : {100u, 500u}) {
    const double eta = std::sqrt(std::log(5.0) / double(horizon));
    std::vector<AgentStream> streams;
    Rng rng = make_stream(73, horizon);
    streams.push_back(iid_stream(Beliefs(5), horizon, 1.0, rng));
    streams.push_back(alternating_stream(5, horizon));
    for (DriftKind k : {DriftKind::kSuddenAtHalf, DriftKind::kGradualLinear,
                        DriftKind::kRecurringQuarterPeriod}) {
      streams.push_back(drift_stream(DriftScenario{k, 1.0}, Beliefs(5), horizon, rng));
    }
    for (const AgentStream& s : streams) {
      const OnlineTrace tr =
          run_online(s, Online(OnlineStrategy::kHedge, int(horizon), EtaSchedule::Fixed(eta)), Loss(), rng);
      EXPECT_LE(compute_regret(tr, Comparator::BestSingleAgent()), regret_bound(5, double(horizon)));
    }
  }
}

TEST(DriftStream, ZeroSigmaEqualsUndriftedStream) {
  Rng a = make_stream(74, 0);
  Rng b = make_stream(74, 0);
  const AgentStream clean = truthful_stream(Beliefs(4), 300, a);
  const AgentStream drifted = drift_stream(DriftScenario{DriftKind::kSuddenAtHalf, 0.0}, Beliefs(4), 300, b);
  EXPECT_EQ(clean.reports, drifted.reports);
  EXPECT_EQ(clean.outcomes, drifted.outcomes);
}

TEST(DriftStream, SuddenDriftReversesQualityRanking) {
  const std::size_t horizon = 4000, n = 5;
  Rng a = make_stream(75, 0);
  Rng b = make_stream(75, 0);
  const AgentStream clean = truthful_stream(Beliefs(int(n)), horizon, a);
  const AgentStream drifted =
      drift_stream(DriftScenario{DriftKind::kSuddenAtHalf, 1.0}, Beliefs(int(n)), horizon, b);
  std::vector<double> before(n, 0.0), after(n, 0.0);
  for (std::size_t t = 0; t < horizon; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const bool corrupted = drifted.reports(t, i) != clean.reports(t, i);
      (t < horizon / 2 ? before : after)[i] += corrupted ? 1.0 : 0.0;
    }
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    EXPECT_LT(before[i], before[i + 1]);
    EXPECT_GT(after[i], after[i + 1]);
  }
}

TEST(CorruptionSchedule, Shapes) {
  const auto start = corruption_schedule(DriftKind::kSuddenAtHalf, 5, 0, 100);
  const auto late = corruption_schedule(DriftKind::kSuddenAtHalf, 5, 50, 100);
  EXPECT_NEAR(start.front(), 0.1, 1e-15);
  EXPECT_NEAR(start.back(), 0.9, 1e-15);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(late[i], start[4 - i], 1e-15);
  const auto mid = corruption_schedule(DriftKind::kGradualLinear, 5, 50, 100);
  for (double q : mid) EXPECT_NEAR(q, 0.5, 1e-12);
  const auto r0 = corruption_schedule(DriftKind::kRecurringQuarterPeriod, 5, 0, 100);
  const auto r25 = corruption_schedule(DriftKind::kRecurringQuarterPeriod, 5, 25, 100);
  const auto r12 = corruption_schedule(DriftKind::kRecurringQuarterPeriod, 5, 12, 100);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(r0[i], r25[i], 1e-12);
  EXPECT_GT(r12.front(), r0.front());
  EXPECT_EQ(corruption_schedule(std::nullopt, 5, 80, 100), start);
}

TEST(EtaSchedule, Resolves) {
  EXPECT_NEAR(EtaSchedule::Theory().Resolve(5, 100), std::sqrt(std::log(5.0) / 100.0), 1e-15);
  EXPECT_NEAR(EtaSchedule::Theory(2.0).Resolve(5, 100), 2.0 * std::sqrt(std::log(5.0) / 100.0), 1e-15);
  EXPECT_DOUBLE_EQ(EtaSchedule::Fixed(0.05).Resolve(5, 100), 0.05);
}

}  // namespace
}  // namespace collcal

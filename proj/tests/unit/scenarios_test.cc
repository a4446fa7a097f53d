#include "collcal/scenarios.h"

#include <algorithm>
#include <set>
#include <string>
#include <variant>

#include <gtest/gtest.h>

namespace collcal {
namespace {

// A canonical-poa run small enough for unit tests.
ScenarioConfig SmallEquilibrium() {
  ScenarioConfig cfg = *find_builtin("canonical-poa");
  cfg.Override("params.eval_samples", "2000");
  cfg.Override("dynamics.mc_samples", "300");
  cfg.Override("dynamics.rounds", "3");
  cfg.Override("seeds", "0..2");
  cfg.Override("columns", "");
  return cfg;
}

TEST(Builtins, CatalogueIsComplete) {
  const auto& all = builtin_scenarios();
  EXPECT_GE(all.size(), 15u);
  std::set<std::string> names;
  for (const auto& b : all) {
    EXPECT_FALSE(b.description.empty()) << b.name;
    EXPECT_FALSE(b.reproduces.empty()) << b.name;
    names.insert(b.name);
  }
  EXPECT_EQ(names.size(), all.size());
  for (const char* required :
       {"canonical-poa", "corr-sweep", "agent-scaling", "observability-grid", "scoring-rules-poa",
        "n2-verify", "general-n-grid", "fixed-delta-convergence", "regret-sensitivity",
        "drift-regret", "adversarial", "miscalibration", "threshold-prevalence", "kloo-approx",
        "ic-verify", "threshold-sweep"}) {
    EXPECT_TRUE(names.count(required)) << required;
  }
  EXPECT_FALSE(find_builtin("no-such-scenario").has_value());
}

class EveryBuiltin : public ::testing::TestWithParam<std::string> {};

TEST_P(EveryBuiltin, ValidatesAndRoundTripsThroughYaml) {
  const ScenarioConfig cfg = *find_builtin(GetParam());
  EXPECT_NO_THROW(cfg.Validate());
  EXPECT_EQ(cfg.name, GetParam());
  const std::string yaml = cfg.ToYaml();
  const ScenarioConfig again = ScenarioConfig::FromYaml(yaml);
  EXPECT_EQ(again.ToYaml(), yaml);
  std::vector<std::string> keys, again_keys;
  for (const auto& c : expand_sweep(cfg)) keys.push_back(c.Key());
  for (const auto& c : expand_sweep(again)) again_keys.push_back(c.Key());
  EXPECT_EQ(keys, again_keys);
}

TEST_P(EveryBuiltin, RunsWithOneSeed) {
  ScenarioConfig cfg = *find_builtin(GetParam());
  cfg.Override("seeds", "0");
  const ScenarioResult r = run_scenario(cfg, RunOptions{1});
  const std::size_t mechanisms = cfg.mechanisms.size();
  const std::size_t cells = expand_sweep(cfg).size();
  EXPECT_EQ(r.table.rows.size(), cells * mechanisms);
  for (const auto& row : r.table.rows) EXPECT_EQ(row.size(), r.table.fields.size());
  EXPECT_FALSE(r.summary.empty());
}

std::vector<std::string> BuiltinNames() {
  std::vector<std::string> names;
  for (const auto& b : builtin_scenarios()) names.push_back(b.name);
  return names;
}

INSTANTIATE_TEST_SUITE_P(Catalogue, EveryBuiltin, ::testing::ValuesIn(BuiltinNames()),
                         [](const auto& info) {
                           std::string s = info.param;
                           std::replace(s.begin(), s.end(), '-', '_');
                           return s;
                         });

TEST(ExpandSweep, EmptySweepIsOneCell) {
  ScenarioConfig cfg = SmallEquilibrium();
  cfg.sweep.clear();
  const auto cells = expand_sweep(cfg);
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0].Key(), "");
}

TEST(ExpandSweep, CartesianProductFirstAxisSlowest) {
  ScenarioConfig cfg = SmallEquilibrium();
  cfg.Override("rho", "0.2,0.5");
  cfg.Override("n", "3,4,5");
  const auto cells = expand_sweep(cfg);
  ASSERT_EQ(cells.size(), 6u);
  EXPECT_EQ(cells[0].Key(), "rho=0.2;n=3");
  EXPECT_EQ(cells[1].Key(), "rho=0.2;n=4");
  EXPECT_EQ(cells[5].Key(), "rho=0.5;n=5");
  EXPECT_DOUBLE_EQ(cells[4].config.belief.rho, 0.5);
  EXPECT_EQ(cells[4].config.belief.n_agents, 4);
}

TEST(Config, OverrideDottedPaths) {
  ScenarioConfig cfg = SmallEquilibrium();
  cfg.Override("belief.kappa", "7.5");
  cfg.Override("loss.tau", "bayes");
  EXPECT_DOUBLE_EQ(cfg.belief.kappa, 7.5);
  EXPECT_NEAR(cfg.loss.tau.value(), 1.0 / 11.0, 1e-12);
  cfg.Override("seeds", "0,3,7..9");
  EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{0, 3, 7, 8, 9}));
}

TEST(Config, ErrorsNameTheKey) {
  ScenarioConfig cfg = SmallEquilibrium();
  try {
    cfg.Override("belief.bogus", "1");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(e.key().find("belief.bogus"), std::string::npos);
  }
  cfg = SmallEquilibrium();
  cfg.Override("rho", "0.2,2");
  try {
    cfg.Validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "sweep.rho");
  }
  cfg = SmallEquilibrium();
  cfg.mechanisms.clear();
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = SmallEquilibrium();
  cfg.seeds.clear();
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = SmallEquilibrium();
  cfg.Override("columns", "mechanism,nonsense");
  EXPECT_THROW(cfg.Validate(), ConfigError);
}

TEST(Config, YamlRejectsUnknownKeys) {
  try {
    ScenarioConfig::FromYaml("name: x\nkind: equilibrium\nbelief: {n_agents: 3, rhoo: 0.5}\n"
                             "mechanisms: [brier]\nseeds: [0]\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "belief.rhoo");
  }
  EXPECT_THROW(ScenarioConfig::FromYaml("name: [unclosed"), ConfigError);
}

TEST(RunScenario, IdenticalAcrossRunsAndThreadCounts) {
  ScenarioConfig cfg = SmallEquilibrium();
  cfg.Override("rho", "0.2,0.8");
  const ScenarioResult a = run_scenario(cfg, RunOptions{1});
  const ScenarioResult b = run_scenario(cfg, RunOptions{1});
  const ScenarioResult c = run_scenario(cfg, RunOptions{3});
  EXPECT_EQ(a.table.fields, c.table.fields);
  EXPECT_EQ(a.table.rows, b.table.rows);
  EXPECT_EQ(a.table.rows, c.table.rows);
}

TEST(RunScenario, RowsSortedByCellMechanismSeed) {
  ScenarioConfig cfg = SmallEquilibrium();
  cfg.Override("rho", "0.2,0.8");
  const ScenarioResult r = run_scenario(cfg, RunOptions{2});
  const auto rho = *r.table.FieldIndex("rho");
  const auto mech = *r.table.FieldIndex("mechanism");
  const auto seed = *r.table.FieldIndex("seed");
  ASSERT_EQ(r.table.rows.size(), 2u * cfg.mechanisms.size() * cfg.seeds.size());
  std::size_t k = 0;
  for (double cell : {0.2, 0.8}) {
    for (const auto& m : cfg.mechanisms) {
      for (std::uint64_t s : cfg.seeds) {
        const auto& row = r.table.rows[k++];
        EXPECT_DOUBLE_EQ(std::get<double>(row[rho]), cell);
        EXPECT_EQ(std::get<std::string>(row[mech]), MechanismSpec::Parse(m).Name());
        EXPECT_EQ(std::get<std::int64_t>(row[seed]), static_cast<std::int64_t>(s));
      }
    }
  }
}

TEST(RunScenario, SummaryAveragesOverSeeds) {
  const ScenarioConfig cfg = SmallEquilibrium();
  const ScenarioResult r = run_scenario(cfg);
  const auto mech = *r.table.FieldIndex("mechanism");
  const auto fn = *r.table.FieldIndex("eq_fn");
  ASSERT_EQ(r.summary.size(), cfg.mechanisms.size());
  for (const SummaryRow& s : r.summary) {
    EXPECT_EQ(s.seeds, cfg.seeds.size());
    const auto& name = std::find_if(s.coords.begin(), s.coords.end(),
                                    [](const auto& c) { return c.first == "mechanism"; })->second;
    double sum = 0.0;
    int count = 0;
    for (const auto& row : r.table.rows) {
      if (std::get<std::string>(row[mech]) != name) continue;
      sum += std::get<double>(row[fn]);
      ++count;
    }
    const auto stat = std::find_if(s.stats.begin(), s.stats.end(),
                                   [](const auto& st) { return st.first == "eq_fn"; });
    ASSERT_NE(stat, s.stats.end());
    EXPECT_NEAR(stat->second.first, sum / count, 1e-12);
  }
}

TEST(RunScenario, SeedsDriveTheResult) {
  ScenarioConfig a = SmallEquilibrium();
  a.Override("seeds", "0");
  ScenarioConfig b = a;
  b.Override("seeds", "1");
  const auto fa = run_scenario(a).table.rows;
  const auto fb = run_scenario(b).table.rows;
  ASSERT_EQ(fa.size(), fb.size());
  EXPECT_NE(fa, fb);
}

}  // namespace
}  // namespace collcal

// Config-driven experiment recipes. A scenario fixes the base belief, loss,
// dynamics and online settings, a list of mechanisms, sweep axes and seeds;
// running it produces one row per (cell, mechanism, seed).
#ifndef COLLCAL_SCENARIOS_H_
#define COLLCAL_SCENARIOS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "collcal/beliefs.h"
#include "collcal/core.h"
#include "collcal/dynamics.h"
#include "collcal/mechanisms.h"
#include "collcal/online.h"

namespace collcal {

// Raised for configuration problems; `key` names the offending setting.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(std::string key, const std::string& message);
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class ScenarioKind {
  kEquilibrium,   // best-response equilibria and PoA per mechanism
  kFixedShift,    // every agent reports b - fixed_delta
  kOnlineRegret,  // online weight learning on report streams
  kAdversarial,   // clean warmup, then attacked reports
  kMiscalibration,
  kKloo,          // k-LOO against exact leave-one-out
  kIcVerify,      // dominant-strategy check
};
std::string_view ToString(ScenarioKind kind);
ScenarioKind ParseScenarioKind(std::string_view token);

// Settings read by particular kinds; the rest are ignored.
struct ScenarioParams {
  // Equilibrium and fixed-shift: size of the fresh batch on which PoA is
  // evaluated (dynamics run on dynamics.mc_samples profiles).
  int eval_samples = 20000;
  // Equilibrium: hold VCG agents at truth (their dominant strategy) instead
  // of running best-response dynamics for them.
  bool vcg_dominant = false;
  double fixed_delta = 0.05;
  // Online kinds: iid, truthful, sudden, gradual, recurring or alternating.
  std::string drift = "iid";
  double sigma_drift = 1.0;
  int comparator_resolution = 0;  // 0 disables the simplex-grid comparator
  // Adversarial: clean steps before the attack, then attacked steps.
  int warmup = 1000;
  int steps = 2000;
  AttackStrategy attack = AttackStrategy::kConstantLow;
  int adversary_count = 0;
  // Share of agents that are adversarial (replaces adversary_count) or
  // miscalibrated; rounded to the nearest agent count.
  std::optional<double> fraction;
  // Miscalibration: temperature applied to the affected agents' reports. The
  // first calibration_steps steps fit Platt scaling and train online
  // weights; metrics use the remaining `steps` steps.
  double temperature = 1.0;
  int calibration_steps = 1000;
  // IC verification.
  int instances = 100;
  int mc_draws = 20000;
  double ic_tolerance = 0.003;
};

struct SweepAxis {
  std::string name;
  std::vector<std::string> values;
};

struct ScenarioConfig {
  std::string name;
  std::string description;
  std::string reproduces;  // the published table this recipe mirrors
  ScenarioKind kind = ScenarioKind::kEquilibrium;
  BeliefConfig belief;
  DynamicsConfig dynamics;
  OnlineConfig online;
  LossParams loss;
  ScenarioParams params;
  std::vector<std::string> mechanisms;  // MechanismSpec tokens
  std::vector<SweepAxis> sweep;         // cartesian product, first axis slowest
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> columns;     // CSV columns; empty selects all fields

  static ScenarioConfig FromYaml(std::string_view text);
  std::string ToYaml() const;

  // Sets a dotted path ("belief.rho", "params.warmup") or, for a bare axis
  // name ("rho"), replaces that sweep axis. Comma-separated values form a
  // list. Throws ConfigError naming the key when it is unknown.
  void Override(std::string_view key, std::string_view value);

  // Checks mechanisms, seeds, axis names and values, and that every cell
  // resolves to a valid configuration.
  void Validate() const;
  std::vector<MechanismSpec> ParsedMechanisms() const;
};

// Names accepted as sweep axes.
const std::vector<std::string>& sweep_axis_names();

// One point of the sweep: the axis values and the config they resolve to.
struct SweepCell {
  std::vector<std::pair<std::string, std::string>> coords;
  ScenarioConfig config;
  std::string Key() const;  // "rho=0.5;tau=0.3", empty without axes
};

std::vector<SweepCell> expand_sweep(const ScenarioConfig& cfg);

// A scalar result: empty, integer, real, text or flag.
using FieldValue = std::variant<std::monostate, std::int64_t, double, std::string, bool>;

struct ResultTable {
  std::vector<std::string> fields;
  std::vector<std::vector<FieldValue>> rows;

  std::optional<std::size_t> FieldIndex(std::string_view field) const;
};

struct SummaryRow {
  std::vector<std::pair<std::string, std::string>> coords;  // cell axes and mechanism
  std::size_t seeds = 0;
  // Per numeric field: mean and sample standard deviation over seeds with a
  // value.
  std::vector<std::pair<std::string, std::pair<double, double>>> stats;
};

struct ScenarioResult {
  ResultTable table;
  std::vector<SummaryRow> summary;
  std::map<std::string, std::string> metadata;
};

struct RunOptions {
  int threads = 1;
};

// Deterministic in (cfg, seeds): each (cell, seed) job draws from streams
// keyed by the seed and the cell coordinates, shared by every mechanism, and
// rows are emitted sorted by cell, mechanism, seed regardless of threads.
ScenarioResult run_scenario(const ScenarioConfig& cfg, const RunOptions& options = {});

struct BuiltinScenario {
  std::string name;
  std::string description;
  std::string reproduces;
  std::string yaml;
};

const std::vector<BuiltinScenario>& builtin_scenarios();
std::optional<ScenarioConfig> find_builtin(std::string_view name);

}  // namespace collcal

#endif  // COLLCAL_SCENARIOS_H_

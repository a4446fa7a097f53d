#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "collcal/scenarios.h"
#include "scenario_internal.h"

namespace collcal {

ConfigError::ConfigError(std::string key, const std::string& message)
    : InvalidArgument(fmt::format("{}: {}", key, message)), key_(std::move(key)) {}

std::string_view ToString(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kEquilibrium: return "equilibrium";
    case ScenarioKind::kFixedShift: return "fixed-shift";
    case ScenarioKind::kOnlineRegret: return "online-regret";
    case ScenarioKind::kAdversarial: return "adversarial";
    case ScenarioKind::kMiscalibration: return "miscalibration";
    case ScenarioKind::kKloo: return "kloo";
    case ScenarioKind::kIcVerify: return "ic-verify";
  }
  return "unknown";
}

ScenarioKind ParseScenarioKind(std::string_view token) {
  for (auto kind : {ScenarioKind::kEquilibrium, ScenarioKind::kFixedShift,
                    ScenarioKind::kOnlineRegret, ScenarioKind::kAdversarial,
                    ScenarioKind::kMiscalibration, ScenarioKind::kKloo,
                    ScenarioKind::kIcVerify}) {
    if (token == ToString(kind)) return kind;
  }
  throw InvalidArgument(fmt::format("unknown scenario kind '{}'", token));
}

namespace {

const std::set<std::string>& DriftTokens() {
  static const std::set<std::string> tokens = {"iid",     "truthful",  "sudden",
                                               "gradual", "recurring", "alternating"};
  return tokens;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> SplitList(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    const auto piece = Trim(text.substr(start, comma == std::string_view::npos
                                                   ? std::string_view::npos
                                                   : comma - start));
    if (!piece.empty()) out.emplace_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double ParseReal(const std::string& key, std::string_view text) {
  text = Trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw ConfigError(key, fmt::format("expected a number, got '{}'", text));
  }
  return value;
}

template <typename Int>
Int ParseInteger(const std::string& key, std::string_view text) {
  text = Trim(text);
  Int value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(key, fmt::format("expected an integer, got '{}'", text));
  }
  return value;
}

bool ParseFlag(const std::string& key, std::string_view text) {
  text = Trim(text);
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  throw ConfigError(key, fmt::format("expected true or false, got '{}'", text));
}

std::string Real(double x) { return fmt::format("{}", x); }

// "0..9" expands to 0,1,...,9; otherwise a single integer.
std::vector<std::uint64_t> ParseSeedItem(const std::string& key, std::string_view item) {
  item = Trim(item);
  const std::size_t dots = item.find("..");
  if (dots == std::string_view::npos) return {ParseInteger<std::uint64_t>(key, item)};
  const auto lo = ParseInteger<std::uint64_t>(key, item.substr(0, dots));
  const auto hi = ParseInteger<std::uint64_t>(key, item.substr(dots + 2));
  if (hi < lo) throw ConfigError(key, fmt::format("empty seed range '{}'", item));
  if (hi - lo >= 1000000) throw ConfigError(key, "seed range too long");
  std::vector<std::uint64_t> out;
  for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  return out;
}

std::vector<std::uint64_t> ParseSeeds(const std::string& key, std::string_view text) {
  std::vector<std::uint64_t> out;
  for (const auto& item : SplitList(text)) {
    const auto part = ParseSeedItem(key, item);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

Observability ParseObservability(const std::string& key, std::string_view text, int n) {
  text = Trim(text);
  if (text == "none") return Observability::None();
  if (text == "full") return Observability::Full();
  if (text == "half") return Observability::Partial(std::max(1, n / 2));
  const int k = ParseInteger<int>(key, text);
  if (k == 0) return Observability::None();
  return Observability::Partial(k);
}

std::string ObservabilityToken(const Observability& o) {
  switch (o.kind) {
    case ObservabilityKind::kNone: return "none";
    case ObservabilityKind::kPartial: return std::to_string(o.k_seen);
    case ObservabilityKind::kFull: return "full";
  }
  return "full";
}

// ---- YAML reading --------------------------------------------------------

std::string Join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void CheckKeys(const YAML::Node& node, const std::string& path,
               std::initializer_list<std::string_view> allowed) {
  if (!node.IsMap()) throw ConfigError(path, "expected a mapping");
  for (const auto& item : node) {
    const auto key = item.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(Join(path, key), "unknown key");
    }
  }
}

std::string ScalarText(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) throw ConfigError(key, "expected a single value");
  return node.Scalar();
}

// Sequence items, or a scalar split on commas.
std::vector<std::string> ListText(const YAML::Node& node, const std::string& key) {
  if (node.IsNull()) return {};
  if (node.IsScalar()) return SplitList(node.Scalar());
  if (!node.IsSequence()) throw ConfigError(key, "expected a list");
  std::vector<std::string> out;
  for (const auto& item : node) {
    const auto text = ScalarText(item, key);
    for (auto& piece : SplitList(text)) out.push_back(std::move(piece));
  }
  return out;
}

template <typename F>
void IfPresent(const YAML::Node& map, const std::string& path, const char* key, F&& read) {
  const YAML::Node node = map[key];
  if (!node || node.IsNull()) return;
  read(ScalarText(node, Join(path, key)), Join(path, key));
}

void ReadBelief(const YAML::Node& node, BeliefConfig& b) {
  const std::string path = "belief";
  CheckKeys(node, path, {"n_agents", "rho", "mu", "kappa"});
  IfPresent(node, path, "n_agents",
            [&](const std::string& t, const std::string& k) { b.n_agents = ParseInteger<int>(k, t); });
  IfPresent(node, path, "rho", [&](const std::string& t, const std::string& k) { b.rho = ParseReal(k, t); });
  IfPresent(node, path, "mu", [&](const std::string& t, const std::string& k) { b.mu = ParseReal(k, t); });
  IfPresent(node, path, "kappa",
            [&](const std::string& t, const std::string& k) { b.kappa = ParseReal(k, t); });
}

void ReadLoss(const YAML::Node& node, LossParams& l) {
  const std::string path = "loss";
  CheckKeys(node, path, {"alpha_fn", "alpha_fp", "tau"});
  IfPresent(node, path, "alpha_fn",
            [&](const std::string& t, const std::string& k) { l.alpha_fn = ParseReal(k, t); });
  IfPresent(node, path, "alpha_fp",
            [&](const std::string& t, const std::string& k) { l.alpha_fp = ParseReal(k, t); });
  IfPresent(node, path, "tau", [&](const std::string& t, const std::string& k) {
    l.tau = Probability(t == "bayes" ? l.BayesThreshold() : ParseReal(k, t));
  });
}

void ReadDynamics(const YAML::Node& node, DynamicsConfig& d, int n) {
  const std::string path = "dynamics";
  CheckKeys(node, path,
            {"rounds", "grid_lo", "grid_hi", "grid_step", "mc_samples", "observability", "order",
             "none_assumes_last_round"});
  IfPresent(node, path, "rounds",
            [&](const std::string& t, const std::string& k) { d.rounds = ParseInteger<int>(k, t); });
  IfPresent(node, path, "grid_lo",
            [&](const std::string& t, const std::string& k) { d.grid_lo = ParseReal(k, t); });
  IfPresent(node, path, "grid_hi",
            [&](const std::string& t, const std::string& k) { d.grid_hi = ParseReal(k, t); });
  IfPresent(node, path, "grid_step",
            [&](const std::string& t, const std::string& k) { d.grid_step = ParseReal(k, t); });
  IfPresent(node, path, "mc_samples", [&](const std::string& t, const std::string& k) {
    d.mc_samples = ParseInteger<int>(k, t);
  });
  IfPresent(node, path, "observability", [&](const std::string& t, const std::string& k) {
    d.observability = ParseObservability(k, t, n);
  });
  IfPresent(node, path, "order", [&](const std::string& t, const std::string& k) {
    if (t == "sequential") {
      d.order = UpdateOrder::kSequential;
    } else if (t == "simultaneous") {
      d.order = UpdateOrder::kSimultaneous;
    } else {
      throw ConfigError(k, fmt::format("expected sequential or simultaneous, got '{}'", t));
    }
  });
  IfPresent(node, path, "none_assumes_last_round",
            [&](const std::string& t, const std::string& k) {
              d.none_assumes_last_round = ParseFlag(k, t);
            });
}

void ReadOnline(const YAML::Node& node, OnlineConfig& o) {
  const std::string path = "online";
  CheckKeys(node, path,
            {"strategy", "eta", "eta_scale", "window", "ema_alpha", "horizon", "k_loo", "prior"});
  IfPresent(node, path, "strategy", [&](const std::string& t, const std::string& k) {
    try {
      o.strategy = ParseOnlineStrategy(t);
    } catch (const InvalidArgument& e) {
      throw ConfigError(k, e.what());
    }
  });
  IfPresent(node, path, "eta", [&](const std::string& t, const std::string& k) {
    if (t == "theory") {
      o.eta.theoretical = true;
    } else {
      o.eta = EtaSchedule::Fixed(ParseReal(k, t));
    }
  });
  IfPresent(node, path, "eta_scale", [&](const std::string& t, const std::string& k) {
    o.eta.scale = ParseReal(k, t);
  });
  IfPresent(node, path, "window",
            [&](const std::string& t, const std::string& k) { o.window = ParseInteger<int>(k, t); });
  IfPresent(node, path, "ema_alpha",
            [&](const std::string& t, const std::string& k) { o.ema_alpha = ParseReal(k, t); });
  IfPresent(node, path, "horizon", [&](const std::string& t, const std::string& k) {
    o.horizon = ParseInteger<int>(k, t);
  });
  IfPresent(node, path, "k_loo", [&](const std::string& t, const std::string& k) {
    if (t == "exact") {
      o.k_loo.reset();
    } else {
      o.k_loo = ParseInteger<int>(k, t);
    }
  });
  IfPresent(node, path, "prior",
            [&](const std::string& t, const std::string& k) { o.prior = ParseReal(k, t); });
}

void ReadParams(const YAML::Node& node, ScenarioParams& p) {
  const std::string path = "params";
  CheckKeys(node, path,
            {"eval_samples", "vcg_dominant", "fixed_delta", "drift", "sigma_drift",
             "comparator_resolution", "warmup", "steps", "attack", "adversary_count",
             "fraction", "temperature", "calibration_steps", "instances", "mc_draws",
             "ic_tolerance"});
  auto int_field = [&](const char* key, int& target) {
    IfPresent(node, path, key,
              [&](const std::string& t, const std::string& k) { target = ParseInteger<int>(k, t); });
  };
  auto real_field = [&](const char* key, double& target) {
    IfPresent(node, path, key,
              [&](const std::string& t, const std::string& k) { target = ParseReal(k, t); });
  };
  int_field("eval_samples", p.eval_samples);
  IfPresent(node, path, "vcg_dominant", [&](const std::string& t, const std::string& k) {
    p.vcg_dominant = ParseFlag(k, t);
  });
  real_field("fixed_delta", p.fixed_delta);
  IfPresent(node, path, "drift", [&](const std::string& t, const std::string& k) {
    if (!DriftTokens().contains(t)) {
      throw ConfigError(k, fmt::format("unknown drift '{}' (expected iid, truthful, sudden, "
                                       "gradual, recurring, alternating)", t));
    }
    p.drift = t;
  });
  real_field("sigma_drift", p.sigma_drift);
  int_field("comparator_resolution", p.comparator_resolution);
  int_field("warmup", p.warmup);
  int_field("steps", p.steps);
  IfPresent(node, path, "attack", [&](const std::string& t, const std::string& k) {
    try {
      p.attack = ParseAttackStrategy(t);
    } catch (const InvalidArgument& e) {
      throw ConfigError(k, e.what());
    }
  });
  int_field("adversary_count", p.adversary_count);
  IfPresent(node, path, "fraction",
            [&](const std::string& t, const std::string& k) { p.fraction = ParseReal(k, t); });
  real_field("temperature", p.temperature);
  int_field("calibration_steps", p.calibration_steps);
  int_field("instances", p.instances);
  int_field("mc_draws", p.mc_draws);
  real_field("ic_tolerance", p.ic_tolerance);
}

// ---- Axis application ----------------------------------------------------

void ApplyAxis(ScenarioConfig& c, const std::string& axis, const std::string& value) {
  const std::string key = "sweep." + axis;
  const int n = c.belief.n_agents;
  auto wrap = [&](auto&& f) {
    try {
      f();
    } catch (const ConfigError&) {
      throw;
    } catch (const InvalidArgument& e) {
      throw ConfigError(key, e.what());
    }
  };
  if (axis == "n") {
    c.belief.n_agents = ParseInteger<int>(key, value);
  } else if (axis == "rho") {
    c.belief.rho = ParseReal(key, value);
  } else if (axis == "mu") {
    c.belief.mu = ParseReal(key, value);
  } else if (axis == "kappa") {
    c.belief.kappa = ParseReal(key, value);
  } else if (axis == "tau") {
    c.loss.tau = Probability(value == "bayes" ? c.loss.BayesThreshold() : ParseReal(key, value));
  } else if (axis == "eta") {
    if (value == "theory") {
      c.online.eta.theoretical = true;
    } else {
      c.online.eta = EtaSchedule::Fixed(ParseReal(key, value));
    }
  } else if (axis == "eta_scale") {
    c.online.eta.theoretical = true;
    c.online.eta.scale = ParseReal(key, value);
  } else if (axis == "T") {
    c.online.horizon = ParseInteger<int>(key, value);
  } else if (axis == "k") {
    if (value == "exact") {
      c.online.k_loo.reset();
    } else if (value == "n") {
      c.online.k_loo = n;
    } else {
      c.online.k_loo = ParseInteger<int>(key, value);
    }
  } else if (axis == "adversary_count") {
    c.params.adversary_count = ParseInteger<int>(key, value);
    c.params.fraction.reset();
  } else if (axis == "fraction") {
    c.params.fraction = ParseReal(key, value);
  } else if (axis == "attack") {
    wrap([&] { c.params.attack = ParseAttackStrategy(value); });
  } else if (axis == "temperature") {
    c.params.temperature = ParseReal(key, value);
  } else if (axis == "fixed_delta") {
    c.params.fixed_delta = ParseReal(key, value);
  } else if (axis == "k_seen") {
    c.dynamics.observability = ParseObservability(key, value, n);
  } else if (axis == "drift") {
    if (!DriftTokens().contains(value)) {
      throw ConfigError(key, fmt::format("unknown drift '{}'", value));
    }
    c.params.drift = value;
  } else if (axis == "sigma_drift") {
    c.params.sigma_drift = ParseReal(key, value);
  } else if (axis == "strategy") {
    wrap([&] { c.online.strategy = ParseOnlineStrategy(value); });
  } else if (axis == "window") {
    c.online.window = ParseInteger<int>(key, value);
  } else if (axis == "ema_alpha") {
    c.online.ema_alpha = ParseReal(key, value);
  } else if (axis == "rounds") {
    c.dynamics.rounds = ParseInteger<int>(key, value);
  } else {
    throw ConfigError(key, "unknown sweep axis");
  }
}

bool IsOnlineKind(ScenarioKind kind) {
  return kind == ScenarioKind::kOnlineRegret || kind == ScenarioKind::kKloo ||
         kind == ScenarioKind::kAdversarial || kind == ScenarioKind::kMiscalibration;
}

bool IsLinearVcg(const MechanismSpec& m) {
  return m.utility.kind == UtilityKind::kVcg &&
         m.aggregator.kind == AggregatorKind::kLinearPool;
}

// Checks one fully resolved configuration (base or cell).
void ValidateResolved(const ScenarioConfig& c) {
  c.belief.Validate();
  c.loss.Validate();
  if (!(c.loss.tau >= 0.0 && c.loss.tau <= 1.0)) {
    throw InvalidArgument(fmt::format("tau must lie in [0,1] (got {})", c.loss.tau));
  }
  const int n = c.belief.n_agents;
  c.dynamics.Validate(n);
  c.online.Validate(static_cast<std::size_t>(n));
  const ScenarioParams& p = c.params;
  if (p.eval_samples < 1) throw InvalidArgument("eval_samples must be >= 1");
  if (!(p.sigma_drift >= 0.0)) throw InvalidArgument("sigma_drift must be >= 0");
  if (p.comparator_resolution < 0) throw InvalidArgument("comparator_resolution must be >= 0");
  if (p.warmup < 0 || p.steps < 1) throw InvalidArgument("need warmup >= 0 and steps >= 1");
  if (p.calibration_steps < 0) throw InvalidArgument("calibration_steps must be >= 0");
  if (p.fraction && !(*p.fraction >= 0.0 && *p.fraction <= 1.0)) {
    throw InvalidArgument(fmt::format("fraction must lie in [0,1] (got {})", *p.fraction));
  }
  if (p.adversary_count < 0 || p.adversary_count > n) {
    throw InvalidArgument(
        fmt::format("adversary_count must lie in [0, {}] (got {})", n, p.adversary_count));
  }
  if (!(p.temperature > 0.0)) throw InvalidArgument("temperature must be positive");
  if (p.instances < 1 || p.mc_draws < 1) {
    throw InvalidArgument("instances and mc_draws must be >= 1");
  }
  if (!(p.ic_tolerance >= 0.0)) throw InvalidArgument("ic_tolerance must be >= 0");
  if (c.kind == ScenarioKind::kOnlineRegret && p.drift == "alternating" && n < 2) {
    throw InvalidArgument("alternating stream needs two agents");
  }
}

}  // namespace

const std::vector<std::string>& sweep_axis_names() {
  static const std::vector<std::string> names = {
      "n",           "rho",       "mu",       "kappa",  "tau",        "eta",
      "eta_scale",   "T",         "k",        "adversary_count",      "fraction",
      "attack",      "temperature", "fixed_delta", "k_seen", "drift",  "sigma_drift",
      "strategy",    "window",    "ema_alpha", "rounds"};
  return names;
}

std::string SweepCell::Key() const {
  std::string key;
  for (const auto& [axis, value] : coords) {
    if (!key.empty()) key += ';';
    key += axis + "=" + value;
  }
  return key;
}

std::vector<SweepCell> expand_sweep(const ScenarioConfig& cfg) {
  std::vector<SweepCell> cells{SweepCell{{}, cfg}};
  for (const auto& axis : cfg.sweep) {
    if (axis.values.empty()) throw ConfigError("sweep." + axis.name, "axis has no values");
    std::vector<SweepCell> next;
    next.reserve(cells.size() * axis.values.size());
    for (const auto& cell : cells) {
      for (const auto& value : axis.values) {
        SweepCell c = cell;
        c.coords.emplace_back(axis.name, value);
        next.push_back(std::move(c));
      }
    }
    cells = std::move(next);
  }
  // The agent count is applied first so that k_seen=half and k=n see it.
  for (auto& cell : cells) {
    for (const auto& [axis, value] : cell.coords) {
      if (axis == "n") ApplyAxis(cell.config, axis, value);
    }
    for (const auto& [axis, value] : cell.coords) {
      if (axis != "n") ApplyAxis(cell.config, axis, value);
    }
    cell.config.sweep.clear();
  }
  return cells;
}

std::vector<MechanismSpec> ScenarioConfig::ParsedMechanisms() const {
  std::vector<MechanismSpec> out;
  for (const auto& token : mechanisms) {
    try {
      out.push_back(MechanismSpec::Parse(token));
      out.back().Validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError("mechanisms", e.what());
    }
  }
  return out;
}

void ScenarioConfig::Validate() const {
  if (mechanisms.empty()) throw ConfigError("mechanisms", "at least one mechanism is required");
  if (seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
  for (auto seed : seeds) {
    if (seed > static_cast<std::uint64_t>(INT64_MAX)) {
      throw ConfigError("seeds", fmt::format("seed {} exceeds 2^63 - 1", seed));
    }
  }
  const auto mechs = ParsedMechanisms();
  if (kind == ScenarioKind::kOnlineRegret || kind == ScenarioKind::kKloo) {
    for (std::size_t m = 0; m < mechs.size(); ++m) {
      if (!IsLinearVcg(mechs[m])) {
        throw ConfigError("mechanisms", fmt::format("'{}': {} runs online VCG weight learning "
                                                    "and accepts only 'vcg'",
                                                    mechanisms[m], ToString(kind)));
      }
    }
  }
  if (IsOnlineKind(kind)) {
    for (std::size_t m = 0; m < mechs.size(); ++m) {
      if (mechs[m].utility.kind == UtilityKind::kVcg && !IsLinearVcg(mechs[m])) {
        throw ConfigError("mechanisms",
                          fmt::format("'{}': online weights apply to the linear pool only",
                                      mechanisms[m]));
      }
    }
  }
  std::set<std::string> seen_axes;
  const auto& names = sweep_axis_names();
  for (const auto& axis : sweep) {
    if (std::find(names.begin(), names.end(), axis.name) == names.end()) {
      throw ConfigError("sweep." + axis.name, "unknown sweep axis");
    }
    if (!seen_axes.insert(axis.name).second) {
      throw ConfigError("sweep." + axis.name, "axis listed twice");
    }
    if (axis.values.empty()) throw ConfigError("sweep." + axis.name, "axis has no values");
  }
  try {
    ValidateResolved(*this);
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string(ToString(kind)), e.what());
  }
  // Each axis value alone, so a bad value is reported against its axis.
  for (const auto& axis : sweep) {
    for (const auto& value : axis.values) {
      ScenarioConfig probe = *this;
      probe.sweep.clear();
      if (axis.name != "n") {
        for (const auto& other : sweep) {
          if (other.name == "n") ApplyAxis(probe, "n", other.values.front());
        }
      }
      ApplyAxis(probe, axis.name, value);
      try {
        ValidateResolved(probe);
      } catch (const InvalidArgument& e) {
        throw ConfigError("sweep." + axis.name,
                          fmt::format("value '{}' is invalid: {}", value, e.what()));
      }
    }
  }
  // Combinations.
  for (const auto& cell : expand_sweep(*this)) {
    try {
      ValidateResolved(cell.config);
    } catch (const InvalidArgument& e) {
      throw ConfigError("sweep", fmt::format("cell {} is invalid: {}", cell.Key(), e.what()));
    }
  }
  if (!columns.empty()) {
    std::vector<std::string> known = {"mechanism", "seed"};
    for (const auto& axis : sweep) known.push_back(axis.name);
    for (auto& f : internal::kind_fields(kind)) known.push_back(std::move(f));
    for (const auto& col : columns) {
      if (std::find(known.begin(), known.end(), col) == known.end()) {
        throw ConfigError("columns", fmt::format("'{}' is not a result field of kind {}", col,
                                                 ToString(kind)));
      }
    }
  }
}

ScenarioConfig ScenarioConfig::FromYaml(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError("config", fmt::format("not valid YAML: {}", e.what()));
  }
  // Results files carry the config under a top-level "config" key.
  if (root.IsMap() && root["config"] && root["config"].IsMap()) root = root["config"];
  CheckKeys(root, "", {"name", "description", "reproduces", "kind", "belief", "loss",
                       "dynamics", "online", "params", "mechanisms", "sweep", "seeds",
                       "columns"});
  ScenarioConfig c;
  IfPresent(root, "", "name", [&](const std::string& t, const std::string&) { c.name = t; });
  IfPresent(root, "", "description",
            [&](const std::string& t, const std::string&) { c.description = t; });
  IfPresent(root, "", "reproduces",
            [&](const std::string& t, const std::string&) { c.reproduces = t; });
  IfPresent(root, "", "kind", [&](const std::string& t, const std::string& k) {
    try {
      c.kind = ParseScenarioKind(t);
    } catch (const InvalidArgument& e) {
      throw ConfigError(k, e.what());
    }
  });
  if (root["belief"]) ReadBelief(root["belief"], c.belief);
  if (root["loss"]) ReadLoss(root["loss"], c.loss);
  if (root["dynamics"]) ReadDynamics(root["dynamics"], c.dynamics, c.belief.n_agents);
  if (root["online"]) ReadOnline(root["online"], c.online);
  if (root["params"]) ReadParams(root["params"], c.params);
  if (root["mechanisms"]) c.mechanisms = ListText(root["mechanisms"], "mechanisms");
  if (root["columns"]) c.columns = ListText(root["columns"], "columns");
  if (root["seeds"]) {
    for (const auto& item : ListText(root["seeds"], "seeds")) {
      const auto part = ParseSeedItem("seeds", item);
      c.seeds.insert(c.seeds.end(), part.begin(), part.end());
    }
  }
  if (const YAML::Node sweep = root["sweep"]; sweep && !sweep.IsNull()) {
    if (!sweep.IsMap()) throw ConfigError("sweep", "expected a mapping of axis to values");
    for (const auto& item : sweep) {
      const auto axis = item.first.as<std::string>();
      c.sweep.push_back({axis, ListText(item.second, "sweep." + axis)});
    }
  }
  return c;
}

std::string ScenarioConfig::ToYaml() const {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << name;
  out << YAML::Key << "description" << YAML::Value << description;
  out << YAML::Key << "reproduces" << YAML::Value << reproduces;
  out << YAML::Key << "kind" << YAML::Value << std::string(ToString(kind));

  out << YAML::Key << "belief" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "n_agents" << YAML::Value << belief.n_agents;
  out << YAML::Key << "rho" << YAML::Value << Real(belief.rho);
  out << YAML::Key << "mu" << YAML::Value << Real(belief.mu);
  out << YAML::Key << "kappa" << YAML::Value << Real(belief.kappa);
  out << YAML::EndMap;

  out << YAML::Key << "loss" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "alpha_fn" << YAML::Value << Real(loss.alpha_fn);
  out << YAML::Key << "alpha_fp" << YAML::Value << Real(loss.alpha_fp);
  out << YAML::Key << "tau" << YAML::Value << Real(loss.tau);
  out << YAML::EndMap;

  out << YAML::Key << "dynamics" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "rounds" << YAML::Value << dynamics.rounds;
  out << YAML::Key << "grid_lo" << YAML::Value << Real(dynamics.grid_lo);
  out << YAML::Key << "grid_hi" << YAML::Value << Real(dynamics.grid_hi);
  out << YAML::Key << "grid_step" << YAML::Value << Real(dynamics.grid_step);
  out << YAML::Key << "mc_samples" << YAML::Value << dynamics.mc_samples;
  out << YAML::Key << "observability" << YAML::Value
      << ObservabilityToken(dynamics.observability);
  out << YAML::Key << "order" << YAML::Value
      << (dynamics.order == UpdateOrder::kSequential ? "sequential" : "simultaneous");
  out << YAML::Key << "none_assumes_last_round" << YAML::Value
      << dynamics.none_assumes_last_round;
  out << YAML::EndMap;

  out << YAML::Key << "online" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "strategy" << YAML::Value << std::string(ToString(online.strategy));
  out << YAML::Key << "eta" << YAML::Value
      << (online.eta.theoretical ? std::string("theory") : Real(online.eta.value));
  out << YAML::Key << "eta_scale" << YAML::Value << Real(online.eta.scale);
  out << YAML::Key << "window" << YAML::Value << online.window;
  out << YAML::Key << "ema_alpha" << YAML::Value << Real(online.ema_alpha);
  out << YAML::Key << "horizon" << YAML::Value << online.horizon;
  out << YAML::Key << "k_loo" << YAML::Value
      << (online.k_loo ? std::to_string(*online.k_loo) : std::string("exact"));
  out << YAML::Key << "prior" << YAML::Value << Real(online.prior);
  out << YAML::EndMap;

  out << YAML::Key << "params" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "eval_samples" << YAML::Value << params.eval_samples;
  out << YAML::Key << "vcg_dominant" << YAML::Value << params.vcg_dominant;
  out << YAML::Key << "fixed_delta" << YAML::Value << Real(params.fixed_delta);
  out << YAML::Key << "drift" << YAML::Value << params.drift;
  out << YAML::Key << "sigma_drift" << YAML::Value << Real(params.sigma_drift);
  out << YAML::Key << "comparator_resolution" << YAML::Value << params.comparator_resolution;
  out << YAML::Key << "warmup" << YAML::Value << params.warmup;
  out << YAML::Key << "steps" << YAML::Value << params.steps;
  out << YAML::Key << "attack" << YAML::Value << std::string(ToString(params.attack));
  out << YAML::Key << "adversary_count" << YAML::Value << params.adversary_count;
  if (params.fraction) out << YAML::Key << "fraction" << YAML::Value << Real(*params.fraction);
  out << YAML::Key << "temperature" << YAML::Value << Real(params.temperature);
  out << YAML::Key << "calibration_steps" << YAML::Value << params.calibration_steps;
  out << YAML::Key << "instances" << YAML::Value << params.instances;
  out << YAML::Key << "mc_draws" << YAML::Value << params.mc_draws;
  out << YAML::Key << "ic_tolerance" << YAML::Value << Real(params.ic_tolerance);
  out << YAML::EndMap;

  out << YAML::Key << "mechanisms" << YAML::Value << YAML::Flow << mechanisms;
  out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
  for (const auto& axis : sweep) {
    // Quoted so the text, which keys the cell's random streams, survives
    // conversion to typed JSON.
    out << YAML::Key << axis.name << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& v : axis.values) out << YAML::DoubleQuoted << v;
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;
  out << YAML::Key << "seeds" << YAML::Value << YAML::Flow << seeds;
  out << YAML::Key << "columns" << YAML::Value << YAML::Flow << columns;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

void ScenarioConfig::Override(std::string_view key_view, std::string_view value) {
  const std::string key(Trim(key_view));
  if (key.empty()) throw ConfigError("--set", "empty key");
  if (key == "seeds") {
    seeds = ParseSeeds(key, value);
    return;
  }
  if (key == "mechanisms" || key == "columns") {
    (key == "mechanisms" ? mechanisms : columns) = SplitList(value);
    return;
  }
  const auto& names = sweep_axis_names();
  const bool is_axis = key.find('.') == std::string::npos &&
                       std::find(names.begin(), names.end(), key) != names.end();
  if (is_axis || key.starts_with("sweep.")) {
    const std::string axis = is_axis ? key : key.substr(6);
    if (std::find(names.begin(), names.end(), axis) == names.end()) {
      throw ConfigError(key, "unknown sweep axis");
    }
    auto values = SplitList(value);
    if (values.empty()) {
      std::erase_if(sweep, [&](const SweepAxis& a) { return a.name == axis; });
      return;
    }
    for (auto& a : sweep) {
      if (a.name == axis) {
        a.values = std::move(values);
        return;
      }
    }
    sweep.push_back({axis, std::move(values)});
    return;
  }
  // Generic dotted path: edit the YAML echo and parse it back, so the
  // strict schema check reports unknown keys.
  YAML::Node root = YAML::Load(ToYaml());
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    parts.push_back(key.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  std::vector<YAML::Node> chain{root};
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    YAML::Node next = chain.back()[parts[i]];
    if (!next.IsDefined() || !next.IsMap()) {
      throw ConfigError(key, fmt::format("unknown key '{}'", parts[i]));
    }
    chain.push_back(next);
  }
  YAML::Node parent = chain.back();
  if (!parent[parts.back()].IsDefined() && parts.size() == 1) {
    throw ConfigError(key, "unknown key");
  }
  if (value.find(',') != std::string_view::npos) {
    YAML::Node seq(YAML::NodeType::Sequence);
    for (const auto& item : SplitList(value)) seq.push_back(item);
    parent[parts.back()] = seq;
  } else {
    parent[parts.back()] = std::string(Trim(value));
  }
  YAML::Emitter out;
  out << root;
  *this = FromYaml(out.c_str());
}

}  // namespace collcal

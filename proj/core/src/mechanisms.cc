#include "collcal/mechanisms.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include <fmt/format.h>

namespace collcal {
namespace {

constexpr double kDegenerateWeight = 1.0 - 1e-12;

double Clip(double p, double clip) { return std::clamp(p, clip, 1.0 - clip); }

double WeightOf(std::span<const double> w, std::size_t i, std::size_t n) {
  return w.empty() ? 1.0 / static_cast<double>(n) : w[i];
}

void CheckWeights(std::span<const double> reports, std::span<const double> w) {
  if (!w.empty() && w.size() != reports.size()) {
    throw InvalidArgument(fmt::format("{} reports but {} weights", reports.size(), w.size()));
  }
}

double LinearSpan(std::span<const double> m, std::span<const double> w) {
  double p = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) p += WeightOf(w, i, m.size()) * m[i];
  return clamp01(p);
}

double LogOddsSpan(std::span<const double> m, std::span<const double> w, double clip) {
  double z = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    z += WeightOf(w, i, m.size()) * logit(Clip(m[i], clip));
  }
  return sigmoid(z);
}

double TrimmedSpan(std::span<const double> m, double alpha) {
  const std::size_t n = m.size();
  const auto cut = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n) + 1e-9));
  if (2 * cut >= n) {
    throw InvalidArgument(
        fmt::format("trimmed mean with alpha={} removes all {} reports", alpha, n));
  }
  std::vector<double> sorted(m.begin(), m.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (std::size_t k = cut; k < n - cut; ++k) sum += sorted[k];
  return sum / static_cast<double>(n - 2 * cut);
}

double MedianSpan(std::span<const double> m) {
  if (m.empty()) throw InvalidArgument("median of no reports");
  std::vector<double> sorted(m.begin(), m.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  return n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

double MajoritySpan(std::span<const double> m, double tau) {
  if (m.empty()) throw InvalidArgument("majority vote of no reports");
  std::size_t above = 0;
  for (double x : m) above += x > tau ? 1 : 0;
  return static_cast<double>(above) / static_cast<double>(m.size());
}

double PlattSpan(std::span<const double> m, std::span<const double> w, PlattParams pp,
                 double clip) {
  const double mean = Clip(LinearSpan(m, w), clip);
  return sigmoid(pp.a * logit(mean) + pp.b);
}

// Splits "name:value" and parses the optional numeric parameter.
std::pair<std::string_view, std::optional<double>> SplitParam(std::string_view token) {
  const auto colon = token.find(':');
  if (colon == std::string_view::npos) return {token, std::nullopt};
  const std::string_view num = token.substr(colon + 1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
  if (ec != std::errc() || ptr != num.data() + num.size()) {
    throw InvalidArgument(fmt::format("bad numeric parameter in mechanism '{}'", token));
  }
  return {token.substr(0, colon), value};
}

std::optional<UtilitySpec> ParseUtility(std::string_view token) {
  const auto [name, param] = SplitParam(token);
  UtilitySpec u;
  if (name == "brier") u.kind = UtilityKind::kBrier;
  else if (name == "log") u.kind = UtilityKind::kLogScore;
  else if (name == "spherical") u.kind = UtilityKind::kSpherical;
  else if (name == "brier-reg") u.kind = UtilityKind::kBrierRegularized;
  else if (name == "vcg") u.kind = UtilityKind::kVcg;
  else if (name == "externality") u.kind = UtilityKind::kExternality;
  else return std::nullopt;
  if (param) {
    if (u.kind == UtilityKind::kBrierRegularized) u.lambda = *param;
    else if (u.kind == UtilityKind::kLogScore) u.clip = *param;
    else throw InvalidArgument(fmt::format("mechanism '{}' takes no parameter", token));
  }
  return u;
}

std::optional<AggregatorSpec> ParseAggregator(std::string_view token) {
  const auto [name, param] = SplitParam(token);
  AggregatorSpec a;
  if (name == "linear") a.kind = AggregatorKind::kLinearPool;
  else if (name == "log-odds") a.kind = AggregatorKind::kLogOddsPool;
  else if (name == "trimmed-mean") a.kind = AggregatorKind::kTrimmedMean;
  else if (name == "median") a.kind = AggregatorKind::kMedian;
  else if (name == "majority") a.kind = AggregatorKind::kMajorityVote;
  else if (name == "platt") a.kind = AggregatorKind::kPlattScaledMean;
  else return std::nullopt;
  if (param) {
    if (a.kind == AggregatorKind::kTrimmedMean) a.trim_alpha = *param;
    else if (a.kind == AggregatorKind::kLogOddsPool) a.clip = *param;
    else throw InvalidArgument(fmt::format("aggregator '{}' takes no parameter", token));
  }
  return a;
}

std::string UtilityName(const UtilitySpec& u) {
  switch (u.kind) {
    case UtilityKind::kNone: return "";
    case UtilityKind::kBrier: return "brier";
    case UtilityKind::kLogScore:
      return u.clip == kDefaultLogClip ? "log" : fmt::format("log:{}", u.clip);
    case UtilityKind::kSpherical: return "spherical";
    case UtilityKind::kBrierRegularized: return fmt::format("brier-reg:{}", u.lambda);
    case UtilityKind::kVcg: return "vcg";
    case UtilityKind::kExternality: return "externality";
  }
  return "unknown";
}

}  // namespace

// ---- Utilities -----------------------------------------------------------

double brier_utility(Probability m, Outcome y) {
  const double d = m.value() - ToInt(y);
  return -d * d;
}

double log_utility(Probability m, Outcome y, double clip) {
  if (!(clip > 0.0 && clip < 0.5)) {
    throw InvalidArgument(fmt::format("log score clip {} outside (0, 0.5)", clip));
  }
  const double p = Clip(m.value(), clip);
  return y == Outcome::kPositive ? std::log(p) : std::log1p(-p);
}

double spherical_utility(Probability m, Outcome y) {
  const double p = m.value();
  const double hit = y == Outcome::kPositive ? p : 1.0 - p;
  return hit / std::sqrt(p * p + (1.0 - p) * (1.0 - p));
}

double brier_regularized_utility(Probability m, Outcome y, double lambda) {
  const double c = m.value() - 0.5;
  return brier_utility(m, y) - lambda * c * c;
}

double externality_utility(const ReportProfile& reports, std::size_t i) {
  const std::size_t n = reports.size();
  if (n < 2) throw InvalidArgument("externality utility needs at least two agents");
  if (i >= n) throw InvalidArgument(fmt::format("agent index {} out of range", i));
  const auto m = reports.values();
  const double others =
      (std::accumulate(m.begin(), m.end(), 0.0) - m[i]) / static_cast<double>(n - 1);
  const double gap = m[i] - others;
  return -gap * gap;
}

double scoring_utility(const UtilitySpec& spec, double m, Outcome y) {
  const Probability p(m);
  switch (spec.kind) {
    case UtilityKind::kBrier: return brier_utility(p, y);
    case UtilityKind::kLogScore: return log_utility(p, y, spec.clip);
    case UtilityKind::kSpherical: return spherical_utility(p, y);
    case UtilityKind::kBrierRegularized: return brier_regularized_utility(p, y, spec.lambda);
    default: break;
  }
  throw InvalidArgument("scoring_utility: not a per-report scoring rule");
}

// ---- Aggregators ---------------------------------------------------------

void AggregatorSpec::Validate() const {
  if (kind == AggregatorKind::kTrimmedMean && !(trim_alpha >= 0.0 && trim_alpha < 0.5)) {
    throw InvalidArgument(fmt::format("trim alpha {} outside [0, 0.5)", trim_alpha));
  }
  if ((kind == AggregatorKind::kLogOddsPool || kind == AggregatorKind::kPlattScaledMean) &&
      !(clip > 0.0 && clip < 0.5)) {
    throw InvalidArgument(fmt::format("clip {} outside (0, 0.5)", clip));
  }
}

bool AggregatorSpec::UsesWeights() const {
  return kind == AggregatorKind::kLinearPool || kind == AggregatorKind::kLogOddsPool ||
         kind == AggregatorKind::kPlattScaledMean;
}

std::string AggregatorSpec::Name() const {
  switch (kind) {
    case AggregatorKind::kLinearPool: return "linear";
    case AggregatorKind::kLogOddsPool: return "log-odds";
    case AggregatorKind::kTrimmedMean: return fmt::format("trimmed-mean:{}", trim_alpha);
    case AggregatorKind::kMedian: return "median";
    case AggregatorKind::kMajorityVote: return "majority";
    case AggregatorKind::kPlattScaledMean: return "platt";
  }
  return "unknown";
}

Probability aggregate_linear(const ReportProfile& reports, const WeightVector& w) {
  if (reports.size() != w.size()) {
    throw InvalidArgument(
        fmt::format("{} reports but {} weights", reports.size(), w.size()));
  }
  return Probability(LinearSpan(reports.values(), w.values()));
}

Probability aggregate_log_odds(const ReportProfile& reports, const WeightVector& w,
                               double clip) {
  if (reports.size() != w.size()) {
    throw InvalidArgument(
        fmt::format("{} reports but {} weights", reports.size(), w.size()));
  }
  return Probability(LogOddsSpan(reports.values(), w.values(), clip));
}

Probability aggregate_trimmed_mean(const ReportProfile& reports, double alpha) {
  if (!(alpha >= 0.0 && alpha < 0.5)) {
    throw InvalidArgument(fmt::format("trim alpha {} outside [0, 0.5)", alpha));
  }
  if (reports.size() == 0) throw InvalidArgument("trimmed mean of no reports");
  return Probability(TrimmedSpan(reports.values(), alpha));
}

Probability aggregate_median(const ReportProfile& reports) {
  return Probability(MedianSpan(reports.values()));
}

Probability aggregate_majority(const ReportProfile& reports, Probability tau) {
  return Probability(MajoritySpan(reports.values(), tau.value()));
}

PlattParams platt_fit(std::span<const double> aggregates,
                      std::span<const Outcome> outcomes) {
  if (aggregates.size() != outcomes.size()) {
    throw InvalidArgument("platt_fit: aggregates and outcomes differ in length");
  }
  if (aggregates.size() < 2) throw InvalidArgument("platt_fit: need at least 2 samples");
  const std::size_t positives = static_cast<std::size_t>(std::count(
      outcomes.begin(), outcomes.end(), Outcome::kPositive));
  if (positives == 0 || positives == outcomes.size()) {
    throw InvalidArgument("platt_fit: outcomes contain a single class");
  }

  std::vector<double> x(aggregates.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    x[k] = logit(Clip(aggregates[k], kDefaultLogClip));
  }
  const auto count = static_cast<double>(x.size());

  auto log_likelihood = [&](double a, double b) {
    double ll = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double z = a * x[k] + b;
      // log sigmoid(z) and log sigmoid(-z), computed stably.
      const double log1pexp = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      ll += outcomes[k] == Outcome::kPositive ? z - log1pexp : -log1pexp;
    }
    return ll / count;
  };

  PlattParams pp;
  double ll = log_likelihood(pp.a, pp.b);
  for (int iter = 0; iter < 100; ++iter) {
    double ga = 0.0, gb = 0.0, haa = 0.0, hab = 0.0, hbb = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double p = sigmoid(pp.a * x[k] + pp.b);
      const double r = ToInt(outcomes[k]) - p;
      const double v = p * (1.0 - p);
      ga += r * x[k];
      gb += r;
      haa += v * x[k] * x[k];
      hab += v * x[k];
      hbb += v;
    }
    ga /= count;
    gb /= count;
    haa /= count;
    hab /= count;
    hbb /= count;
    if (std::hypot(ga, gb) < 1e-8) break;
    const double det = haa * hbb - hab * hab;
    if (!(det > 0.0)) break;
    // Newton direction solves H d = g for the (negated) Hessian.
    const double da = (hbb * ga - hab * gb) / det;
    const double db = (haa * gb - hab * ga) / det;
    double step = 1.0;
    for (int halving = 0; halving < 30; ++halving, step *= 0.5) {
      const double cand = log_likelihood(pp.a + step * da, pp.b + step * db);
      if (cand >= ll) {
        pp.a += step * da;
        pp.b += step * db;
        ll = cand;
        break;
      }
    }
  }
  return pp;
}

Probability platt_apply(Probability mean_report, PlattParams params, double clip) {
  return Probability(sigmoid(params.a * logit(Clip(mean_report.value(), clip)) + params.b));
}

double aggregate(const AggregatorSpec& spec, std::span<const double> reports,
                 std::span<const double> weights, double tau) {
  CheckWeights(reports, weights);
  if (reports.empty()) throw InvalidArgument("aggregate of no reports");
  switch (spec.kind) {
    case AggregatorKind::kLinearPool: return LinearSpan(reports, weights);
    case AggregatorKind::kLogOddsPool: return LogOddsSpan(reports, weights, spec.clip);
    case AggregatorKind::kTrimmedMean: return TrimmedSpan(reports, spec.trim_alpha);
    case AggregatorKind::kMedian: return MedianSpan(reports);
    case AggregatorKind::kMajorityVote: return MajoritySpan(reports, tau);
    case AggregatorKind::kPlattScaledMean:
      return PlattSpan(reports, weights, spec.platt, spec.clip);
  }
  throw InvalidArgument("unknown aggregator");
}

double aggregate_excluding(const AggregatorSpec& spec, std::span<const double> reports,
                           std::span<const double> weights, std::size_t i, double tau,
                           double prior, bool* degenerate) {
  CheckWeights(reports, weights);
  const std::size_t n = reports.size();
  if (n < 2) throw InvalidArgument("leave-one-out needs at least two agents");
  if (i >= n) throw InvalidArgument(fmt::format("agent index {} out of range", i));
  if (degenerate != nullptr) *degenerate = false;

  std::vector<double> rest;
  rest.reserve(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    if (j != i) rest.push_back(reports[j]);
  }
  if (!spec.UsesWeights() || weights.empty()) {
    return aggregate(spec, rest, {}, tau);
  }
  const double wi = weights[i];
  if (wi >= kDegenerateWeight) {
    if (degenerate != nullptr) *degenerate = true;
    return prior;
  }
  std::vector<double> rest_w;
  rest_w.reserve(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    if (j != i) rest_w.push_back(weights[j] / (1.0 - wi));
  }
  return aggregate(spec, rest, rest_w, tau);
}

// ---- Mechanisms ----------------------------------------------------------

MechanismSpec MechanismSpec::Parse(std::string_view token) {
  MechanismSpec spec;
  const auto slash = token.find('/');
  const std::string_view head = token.substr(0, slash);
  if (auto u = ParseUtility(head)) {
    spec.utility = *u;
    if (slash != std::string_view::npos) {
      const std::string_view tail = token.substr(slash + 1);
      auto a = ParseAggregator(tail);
      if (!a) throw InvalidArgument(fmt::format("unknown aggregator '{}'", tail));
      spec.aggregator = *a;
    }
  } else if (auto a = ParseAggregator(head); a && slash == std::string_view::npos) {
    spec.utility.kind = UtilityKind::kNone;
    spec.aggregator = *a;
  } else {
    throw InvalidArgument(fmt::format("unknown mechanism '{}'", token));
  }
  spec.Validate();
  return spec;
}

void MechanismSpec::Validate() const {
  if (!(utility.lambda >= 0.0)) {
    throw InvalidArgument(fmt::format("regularization lambda {} is negative", utility.lambda));
  }
  if (utility.kind == UtilityKind::kLogScore && !(utility.clip > 0.0 && utility.clip < 0.5)) {
    throw InvalidArgument(fmt::format("log score clip {} outside (0, 0.5)", utility.clip));
  }
  aggregator.Validate();
}

std::string MechanismSpec::Name() const {
  if (utility.kind == UtilityKind::kNone) return aggregator.Name();
  const std::string u = UtilityName(utility);
  if (aggregator.kind == AggregatorKind::kLinearPool) return u;
  return u + "/" + aggregator.Name();
}

double vcg_utility(const ReportProfile& reports, const WeightVector& w, Outcome y,
                   std::size_t i, const LossParams& params,
                   const AggregatorSpec& aggregator, double prior) {
  if (reports.size() < 2) throw InvalidArgument("VCG utility needs at least two agents");
  if (reports.size() != w.size()) {
    throw InvalidArgument(fmt::format("{} reports but {} weights", reports.size(), w.size()));
  }
  return agent_utility(MechanismSpec{UtilitySpec{UtilityKind::kVcg}, aggregator},
                       reports.values(), w.values(), y, i, params, prior);
}

double agent_utility(const MechanismSpec& mech, std::span<const double> reports,
                     std::span<const double> weights, Outcome y, std::size_t i,
                     const LossParams& params, double prior) {
  if (i >= reports.size()) throw InvalidArgument(fmt::format("agent index {} out of range", i));
  const double tau = params.tau.value();
  switch (mech.utility.kind) {
    case UtilityKind::kNone: return 0.0;
    case UtilityKind::kVcg: {
      const double with = aggregate(mech.aggregator, reports, weights, tau);
      const double without =
          aggregate_excluding(mech.aggregator, reports, weights, i, tau, prior);
      return decision_loss(without, y, params) - decision_loss(with, y, params);
    }
    case UtilityKind::kExternality: {
      if (reports.size() < 2) {
        throw InvalidArgument("externality utility needs at least two agents");
      }
      const double others =
          (std::accumulate(reports.begin(), reports.end(), 0.0) - reports[i]) /
          static_cast<double>(reports.size() - 1);
      const double gap = reports[i] - others;
      return -gap * gap;
    }
    default: return scoring_utility(mech.utility, reports[i], y);
  }
}

}  // namespace collcal

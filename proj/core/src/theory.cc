#include "collcal/theory.h"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "collcal/core.h"

namespace collcal {
namespace {

void CheckScaling(int n, double rho, double mu) {
  if (n < 2) throw InvalidArgument(fmt::format("n must be >= 2 (got {})", n));
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw InvalidArgument(fmt::format("rho must lie in [0,1) (got {})", rho));
  }
  if (!(mu > 0.0 && mu < 1.0)) {
    throw InvalidArgument(fmt::format("mu must lie in (0,1) (got {})", mu));
  }
}

}  // namespace

void TheoryInputs::Validate() const {
  if (!(var_b > 0.0)) throw InvalidArgument(fmt::format("var_b must be positive (got {})", var_b));
  if (std::abs(cov_b) > var_b) {
    throw InvalidArgument(fmt::format("|cov_b| = {} exceeds var_b = {}", std::abs(cov_b), var_b));
  }
  if (!(mu > 0.0 && mu < 1.0)) throw InvalidArgument(fmt::format("mu must lie in (0,1) (got {})", mu));
}

double delta_star_n2(const TheoryInputs& inputs) {
  inputs.Validate();
  const double denom = 2.0 * (inputs.var_b + inputs.cov_b);
  if (denom == 0.0) throw InvalidArgument("delta_star_n2: Var + Cov is zero");
  return inputs.cov_b / denom * (1.0 - 2.0 * inputs.mu);
}

double intra_class_factor(int n, double rho) {
  const double shared = (n - 1) * rho;
  return shared / (1.0 + shared);
}

double delta_star_general(int n, double rho, double mu) {
  CheckScaling(n, rho, mu);
  return intra_class_factor(n, rho) * (1.0 - 2.0 * mu) / (2.0 * n);
}

double total_bias_limit(double rho, double mu, int n) {
  return n * delta_star_general(n, rho, mu);
}

double total_bias_asymptote(double mu) { return (1.0 - 2.0 * mu) / 2.0; }

double regret_bound(double n, double horizon) {
  if (!(n >= 1.0)) throw InvalidArgument(fmt::format("n must be >= 1 (got {})", n));
  if (!(horizon >= 1.0)) throw InvalidArgument(fmt::format("T must be >= 1 (got {})", horizon));
  return 2.0 * std::sqrt(horizon * std::log(n));
}

ConjectureReport verify_conjecture(std::span<const ConjectureCell> cells, double mu,
                                   double zero_tolerance) {
  ConjectureReport report;
  int agree = 0;
  std::map<int, std::vector<const ConjectureCellReport*>> by_n;
  report.cells.reserve(cells.size());
  for (const ConjectureCell& cell : cells) {
    ConjectureCellReport r;
    r.cell = cell;
    r.theory_latent = delta_star_general(cell.n, cell.rho, mu);
    if (cell.realized_rho) {
      r.theory_realized =
          delta_star_general(cell.n, std::clamp(*cell.realized_rho, 0.0, 0.999999), mu);
    }
    if (r.theory_latent == 0.0) {
      r.sign_agrees = std::abs(cell.empirical_shift) <= zero_tolerance;
    } else {
      const bool predicted_under = r.theory_latent > 0.0;
      r.sign_agrees = predicted_under ? cell.empirical_shift < 0.0 : cell.empirical_shift > 0.0;
      r.magnitude_ratio = std::abs(cell.empirical_shift) / std::abs(r.theory_latent);
    }
    agree += r.sign_agrees ? 1 : 0;
    report.cells.push_back(r);
  }
  for (const ConjectureCellReport& r : report.cells) by_n[r.cell.n].push_back(&r);
  report.sign_agreement =
      cells.empty() ? 0.0 : static_cast<double>(agree) / static_cast<double>(cells.size());

  for (auto& [n, group] : by_n) {
    std::sort(group.begin(), group.end(), [](const auto* a, const auto* b) {
      return a->cell.rho < b->cell.rho;
    });
    MonotonicityReport m;
    m.n = n;
    m.theory_monotone = true;
    for (std::size_t a = 0; a < group.size(); ++a) {
      for (std::size_t b = a + 1; b < group.size(); ++b) {
        if (group[a]->cell.rho == group[b]->cell.rho) continue;
        ++m.pairs;
        // Underreporting magnitude is -empirical_shift.
        if (-group[b]->cell.empirical_shift >= -group[a]->cell.empirical_shift) {
          ++m.empirical_ordered_pairs;
        }
        if (group[b]->theory_latent < group[a]->theory_latent) m.theory_monotone = false;
      }
    }
    m.empirical_monotone = m.empirical_ordered_pairs == m.pairs;
    report.monotonicity.push_back(m);
  }
  return report;
}

}  // namespace collcal

// Closed-form predictions: the n = 2 equilibrium shift, the general-n
// scaling conjecture, the total-bias limit, and the Hedge regret bound, plus
// a comparison of those predictions against simulated equilibria.
//
// Sign convention: the formulas return a positive magnitude for
// underreporting. Simulated shifts are the signed mean of (m_i - b_i), so
// underreporting shows up there as a negative number.
#ifndef COLLCAL_THEORY_H_
#define COLLCAL_THEORY_H_

#include <optional>
#include <span>
#include <vector>

namespace collcal {

struct TheoryInputs {
  double var_b = 0.0;  // Var(b_i)
  double cov_b = 0.0;  // Cov(b_i, b_j)
  double mu = 0.5;
  int n = 2;
  double rho = 0.0;

  void Validate() const;
};

// Cov / (2 (Var + Cov)) * (1 - 2 mu).
double delta_star_n2(const TheoryInputs& inputs);

// (n-1) rho / (1 + (n-1) rho).
double intra_class_factor(int n, double rho);

// intra_class_factor(n, rho) * (1 - 2 mu) / (2 n).
double delta_star_general(int n, double rho, double mu);

// n * delta_star_general(n, rho, mu); tends to (1 - 2 mu) / 2.
double total_bias_limit(double rho, double mu, int n);
double total_bias_asymptote(double mu);

// 2 sqrt(T ln n). Real-valued n is accepted so the bound can be evaluated
// at any argument; n >= 1 and T >= 1 are required.
double regret_bound(double n, double horizon);

struct ConjectureCell {
  int n = 2;
  double rho = 0.0;
  double empirical_shift = 0.0;  // signed mean of (m - b)
  std::optional<double> realized_rho;
};

struct ConjectureCellReport {
  ConjectureCell cell;
  double theory_latent = 0.0;                 // formula at the latent rho
  std::optional<double> theory_realized;      // formula at the realized rho
  bool sign_agrees = false;
  std::optional<double> magnitude_ratio;      // |empirical| / theory_latent
};

struct MonotonicityReport {
  int n = 0;
  int pairs = 0;
  int empirical_ordered_pairs = 0;  // pairs where underreporting grows with rho
  bool empirical_monotone = false;
  bool theory_monotone = false;
};

struct ConjectureReport {
  std::vector<ConjectureCellReport> cells;
  double sign_agreement = 0.0;  // fraction of cells whose signs agree
  std::vector<MonotonicityReport> monotonicity;
};

// Cells whose formula value is 0 agree when |empirical| <= zero_tolerance;
// otherwise agreement means the empirical shift is negative (underreporting).
ConjectureReport verify_conjecture(std::span<const ConjectureCell> cells, double mu,
                                   double zero_tolerance = 0.005);

}  // namespace collcal

#endif  // COLLCAL_THEORY_H_

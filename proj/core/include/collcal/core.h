// Foundational value types shared by every module: probabilities, outcomes,
// thresholded decisions, the asymmetric loss, and report/weight containers.
#ifndef COLLCAL_CORE_H_
#define COLLCAL_CORE_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace collcal {

// Raised for any argument that violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Values within this distance of [0,1] are clamped rather than rejected.
inline constexpr double kProbabilitySlack = 1e-12;

// A real number in [0,1]. Construction rejects values further than
// kProbabilitySlack outside the interval.
class Probability {
 public:
  constexpr Probability() = default;
  explicit Probability(double value);

  // Clamps any finite value into [0,1]. Used where the caller has already
  // decided that out-of-range values are legitimate (e.g. clamp(b - delta)).
  static Probability Clamp(double value);

  constexpr double value() const { return value_; }
  constexpr operator double() const { return value_; }  // NOLINT

 private:
  double value_ = 0.0;
};

enum class Outcome : std::uint8_t { kNegative = 0, kPositive = 1 };

constexpr int ToInt(Outcome y) { return static_cast<int>(y); }
constexpr Outcome OutcomeFromBool(bool positive) {
  return positive ? Outcome::kPositive : Outcome::kNegative;
}

// A thresholded decision. Only decide() produces one.
class Decision {
 public:
  constexpr bool positive() const { return positive_; }
  constexpr int value() const { return positive_ ? 1 : 0; }
  friend constexpr bool operator==(Decision, Decision) = default;

 private:
  friend Decision decide(Probability p_hat, Probability tau);
  constexpr explicit Decision(bool positive) : positive_(positive) {}
  bool positive_ = false;
};

struct LossParams {
  double alpha_fn = 10.0;
  double alpha_fp = 1.0;
  Probability tau{0.5};

  // Throws InvalidArgument on negative costs.
  void Validate() const;
  // The larger of the two costs; the range of asymmetric_loss.
  double MaxLoss() const;
  // Threshold at which thresholding a calibrated probability minimizes
  // expected loss: alpha_fp / (alpha_fn + alpha_fp).
  double BayesThreshold() const;
};

// Returns a positive decision iff p_hat > tau (strict).
Decision decide(Probability p_hat, Probability tau);

double asymmetric_loss(Decision d, Outcome y, const LossParams& params);

// Loss of thresholding p at params.tau against y; the composition used in
// every welfare computation.
double decision_loss(double p, Outcome y, const LossParams& params);

// Agent reports m_i in [0,1]. Stored as plain doubles so hot loops can take
// a span; every mutation path re-validates.
class ReportProfile {
 public:
  ReportProfile() = default;
  explicit ReportProfile(std::vector<double> reports);
  ReportProfile(std::initializer_list<double> reports);

  std::size_t size() const { return reports_.size(); }
  Probability operator[](std::size_t i) const { return Probability(reports_[i]); }
  void set(std::size_t i, Probability p) { reports_.at(i) = p.value(); }
  std::span<const double> values() const { return reports_; }

  friend bool operator==(const ReportProfile&, const ReportProfile&) = default;

 private:
  std::vector<double> reports_;
};

// Nonnegative weights summing to 1 within 1e-9.
class WeightVector {
 public:
  static constexpr double kSumTolerance = 1e-9;

  WeightVector() = default;
  explicit WeightVector(std::vector<double> weights);
  WeightVector(std::initializer_list<double> weights);

  static WeightVector Uniform(std::size_t n);
  // Normalizes nonnegative raw masses; all-zero input yields uniform.
  static WeightVector Normalize(std::vector<double> masses);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> values() const { return weights_; }

  friend bool operator==(const WeightVector&, const WeightVector&) = default;

 private:
  std::vector<double> weights_;
};

// Dense row-major matrix of doubles (rows x cols); used for batches of
// beliefs or reports and for per-step traces.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> data() const { return data_; }
  void AppendRow(std::span<const double> values);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double clamp01(double x);
double sigmoid(double x);
double logit(double p);

}  // namespace collcal

#endif  // COLLCAL_CORE_H_

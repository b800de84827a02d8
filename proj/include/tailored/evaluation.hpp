#pragma once

// Net Benefit, paired Net Benefit differences, binned calibration, logistic
// recalibration and a family of controlled miscalibrations.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tailored/model.hpp"

namespace tailored {

struct NetBenefitReport {
  TargetThreshold t{0.5};
  std::size_t tp_count = 0;
  std::size_t fp_count = 0;
  std::size_t n = 0;
  double net_benefit = 0.0;
};

/// TP/n - FP/n * t/(1-t).
double net_benefit_from_counts(std::size_t tp, std::size_t fp, std::size_t n, TargetThreshold t);

/// Counts rows with prediction >= t. Throws on empty or mismatched input.
NetBenefitReport net_benefit(std::span<const double> predictions, std::span<const int> outcomes,
                             TargetThreshold t);

struct PairedDelta {
  std::vector<double> differences;
  double mean_delta = 0.0;
  double se_delta = 0.0;
};

/// D_i = a_i - b_i, SE = sqrt(sum (D_i - mean)^2 / (m (m - 1))). Needs m >= 2.
PairedDelta paired_delta(std::span<const double> nb_a, std::span<const double> nb_b);

struct CalibrationCurve {
  std::vector<double> edges;  // n_bins + 1 entries, 0 .. 1
  std::vector<double> mean_predicted;
  /// NaN for empty bins.
  std::vector<double> observed_fraction;
  std::vector<std::size_t> counts;

  bool occupied(std::size_t bin) const { return counts[bin] > 0; }
};

CalibrationCurve calibration_curve(std::span<const double> predictions, std::span<const int> outcomes,
                                   std::size_t n_bins);

struct RecalibrationResult {
  std::vector<double> probabilities;
  double intercept = 0.0;
  double slope = 1.0;
  double intercept_se = 0.0;
  double slope_se = 0.0;
  std::size_t iterations = 0;
};

inline constexpr std::size_t kRecalibrationMaxIterations = 100;
inline constexpr double kRecalibrationGradientTol = 1e-8;
inline constexpr double kRecalibrationDecrementTol = 1e-10;

/// Maximum-likelihood fit of logit(p_new) = a + b logit(p_raw) by Newton's
/// method. Throws RecalibrationError on constant outcomes, separation or
/// non-convergence.
RecalibrationResult logistic_recalibrate(std::span<const double> raw_probabilities,
                                         std::span<const int> outcomes);

enum class MiscalibrationKind { overestimation, underestimation, overfitting, underfitting };
enum class MiscalibrationDegree { mild, severe };

struct MiscalibrationSpec {
  MiscalibrationKind kind;
  MiscalibrationDegree degree;

  /// Logit shift for over/underestimation (signed), 0 otherwise.
  double logit_shift() const;
  /// Logit slope about the pivot for over/underfitting, 1 otherwise.
  double logit_slope() const;
};

double logit(double p);

/// pivot + slope * (logit(p) + shift - pivot), mapped back through sigma.
std::vector<double> logit_affine(std::span<const double> probabilities, double shift, double slope,
                                 double pivot);

/// Applies a logit-affine transform; the pivot is the logit of the
/// mean input probability. Inputs must lie strictly inside (0, 1).
std::vector<double> perturb_calibration(std::span<const double> probabilities,
                                        const MiscalibrationSpec& spec);

std::string to_string(MiscalibrationKind kind);
std::string to_string(MiscalibrationDegree degree);

}  // namespace tailored

#include "tailored/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tailored/error.hpp"

namespace tailored {

double net_benefit_from_counts(std::size_t tp, std::size_t fp, std::size_t n, TargetThreshold t) {
  if (n == 0) throw DataError("net benefit of an empty set");
  if (tp + fp > n) throw DataError("tp + fp cannot exceed n");
  const double nn = static_cast<double>(n);
  return static_cast<double>(tp) / nn - static_cast<double>(fp) / nn * t.odds();
}

NetBenefitReport net_benefit(std::span<const double> predictions, std::span<const int> outcomes,
                             TargetThreshold t) {
  if (predictions.empty()) throw DataError("net benefit of an empty set");
  if (predictions.size() != outcomes.size()) {
    throw DimensionError("predictions and outcomes differ in length");
  }
  NetBenefitReport report;
  report.t = t;
  report.n = predictions.size();
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] >= t.value()) {
      if (outcomes[i] == 1) {
        ++report.tp_count;
      } else {
        ++report.fp_count;
      }
    }
  }
  report.net_benefit = net_benefit_from_counts(report.tp_count, report.fp_count, report.n, t);
  return report;
}

PairedDelta paired_delta(std::span<const double> nb_a, std::span<const double> nb_b) {
  if (nb_a.size() != nb_b.size()) throw DimensionError("paired NB vectors differ in length");
  const std::size_t m = nb_a.size();
  if (m < 2) throw DataError("paired difference needs at least two splits");
  PairedDelta out;
  out.differences.resize(m);
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    out.differences[i] = nb_a[i] - nb_b[i];
    sum += out.differences[i];
  }
  const double mm = static_cast<double>(m);
  out.mean_delta = sum / mm;
  double ss = 0.0;
  for (double d : out.differences) ss += (d - out.mean_delta) * (d - out.mean_delta);
  out.se_delta = std::sqrt(ss / (mm * (mm - 1.0)));
  // equal differences give exactly zero spread
  if (std::ranges::all_of(out.differences, [&](double d) { return d == out.differences[0]; })) {
    out.se_delta = 0.0;
  }
  return out;
}

CalibrationCurve calibration_curve(std::span<const double> predictions, std::span<const int> outcomes,
                                   std::size_t n_bins) {
  if (n_bins < 2) throw ConfigError("calibration curve needs at least two bins");
  if (predictions.empty()) throw DataError("calibration curve of an empty set");
  if (predictions.size() != outcomes.size()) {
    throw DimensionError("predictions and outcomes differ in length");
  }
  CalibrationCurve curve;
  for (std::size_t b = 0; b <= n_bins; ++b) {
    curve.edges.push_back(static_cast<double>(b) / static_cast<double>(n_bins));
  }
  curve.mean_predicted.assign(n_bins, 0.0);
  curve.observed_fraction.assign(n_bins, 0.0);
  curve.counts.assign(n_bins, 0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double p = predictions[i];
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("predictions must lie in [0, 1]");
    const auto b = std::min(static_cast<std::size_t>(p * static_cast<double>(n_bins)), n_bins - 1);
    ++curve.counts[b];
    curve.mean_predicted[b] += p;
    curve.observed_fraction[b] += outcomes[i];
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (curve.counts[b] == 0) {
      curve.mean_predicted[b] = std::numeric_limits<double>::quiet_NaN();
      curve.observed_fraction[b] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double c = static_cast<double>(curve.counts[b]);
    curve.mean_predicted[b] /= c;
    curve.observed_fraction[b] /= c;
  }
  return curve;
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

namespace {

double recalibration_log_likelihood(std::span<const double> z, std::span<const int> y, double a,
                                    double b) {
  double ll = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double eta = a + b * z[i];
    ll += y[i] == 1 ? log_sigmoid(eta) : log_sigmoid(-eta);
  }
  return ll;
}

}  // namespace

RecalibrationResult logistic_recalibrate(std::span<const double> raw_probabilities,
                                         std::span<const int> outcomes) {
  if (raw_probabilities.size() != outcomes.size()) {
    throw DimensionError("probabilities and outcomes differ in length");
  }
  if (raw_probabilities.empty()) throw DataError("recalibration of an empty set");
  std::vector<double> z(raw_probabilities.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double p = raw_probabilities[i];
    if (!(p > 0.0 && p < 1.0)) throw DataError("raw probabilities must lie strictly inside (0, 1)");
    if (outcomes[i] != 0 && outcomes[i] != 1) throw DataError("outcomes must be 0 or 1");
    z[i] = logit(p);
  }

  double z_max0 = -std::numeric_limits<double>::infinity();
  double z_min0 = std::numeric_limits<double>::infinity();
  double z_max1 = -std::numeric_limits<double>::infinity();
  double z_min1 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (outcomes[i] == 1) {
      z_max1 = std::max(z_max1, z[i]);
      z_min1 = std::min(z_min1, z[i]);
    } else {
      z_max0 = std::max(z_max0, z[i]);
      z_min0 = std::min(z_min0, z[i]);
    }
  }
  if (!std::isfinite(z_max0) || !std::isfinite(z_max1)) {
    throw RecalibrationError("recalibration failed: outcomes are constant (complete separation)");
  }
  if (z_max0 <= z_min1 || z_max1 <= z_min0) {
    throw RecalibrationError("recalibration failed: outcomes are separated by the raw logits");
  }

  double a = 0.0;
  double b = 1.0;
  double ll = recalibration_log_likelihood(z, outcomes, a, b);
  RecalibrationResult result;
  bool converged = false;
  double h00 = 0.0, h01 = 0.0, h11 = 0.0;

  for (std::size_t iter = 0; iter <= kRecalibrationMaxIterations; ++iter) {
    double g0 = 0.0, g1 = 0.0;
    h00 = h01 = h11 = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double p = logistic(a + b * z[i]);
      const double r = outcomes[i] - p;
      const double v = p * (1.0 - p);
      g0 += r;
      g1 += r * z[i];
      h00 += v;
      h01 += v * z[i];
      h11 += v * z[i] * z[i];
    }
    result.iterations = iter;
    if (std::hypot(g0, g1) < kRecalibrationGradientTol) {
      converged = true;
      break;
    }
    if (iter == kRecalibrationMaxIterations) break;
    const double det = h00 * h11 - h01 * h01;
    if (!(det > 0.0) || !std::isfinite(det)) break;
    // Newton step on the information matrix, halved until the likelihood improves
    double da = (h11 * g0 - h01 * g1) / det;
    double db = (h00 * g1 - h01 * g0) / det;
    // Newton decrement: predicted log-likelihood gain of the full step
    if (0.5 * (g0 * da + g1 * db) < kRecalibrationDecrementTol) {
      converged = true;
      break;
    }
    for (int halving = 0; halving < 30; ++halving) {
      const double next = recalibration_log_likelihood(z, outcomes, a + da, b + db);
      if (next >= ll) {
        a += da;
        b += db;
        ll = next;
        break;
      }
      da *= 0.5;
      db *= 0.5;
    }
  }
  if (!converged) throw RecalibrationError("recalibration failed to converge within 100 iterations");

  const double det = h00 * h11 - h01 * h01;
  result.intercept = a;
  result.slope = b;
  result.intercept_se = std::sqrt(h11 / det);
  result.slope_se = std::sqrt(h00 / det);
  result.probabilities.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) result.probabilities[i] = logistic(a + b * z[i]);
  return result;
}

double MiscalibrationSpec::logit_shift() const {
  const double delta = degree == MiscalibrationDegree::mild ? 0.5 : 1.5;
  switch (kind) {
    case MiscalibrationKind::overestimation:
      return delta;
    case MiscalibrationKind::underestimation:
      return -delta;
    default:
      return 0.0;
  }
}

double MiscalibrationSpec::logit_slope() const {
  const double gamma = degree == MiscalibrationDegree::mild ? 1.5 : 3.0;
  switch (kind) {
    case MiscalibrationKind::overfitting:
      return gamma;
    case MiscalibrationKind::underfitting:
      return 1.0 / gamma;
    default:
      return 1.0;
  }
}

std::vector<double> logit_affine(std::span<const double> probabilities, double shift, double slope,
                                 double pivot) {
  std::vector<double> out(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = probabilities[i];
    if (!(p > 0.0 && p < 1.0)) throw DataError("probabilities must lie strictly inside (0, 1)");
    const double z = logit(p) + shift;
    // clamp to keep the output strictly inside (0, 1) in double precision
    const double eta = std::clamp(pivot + slope * (z - pivot), -36.0, 36.0);
    out[i] = logistic(eta);
  }
  return out;
}

std::vector<double> perturb_calibration(std::span<const double> probabilities,
                                        const MiscalibrationSpec& spec) {
  if (probabilities.empty()) return {};
  double mean = 0.0;
  for (double p : probabilities) {
    if (!(p > 0.0 && p < 1.0)) throw DataError("probabilities must lie strictly inside (0, 1)");
    mean += p;
  }
  mean /= static_cast<double>(probabilities.size());
  return logit_affine(probabilities, spec.logit_shift(), spec.logit_slope(), logit(mean));
}

std::string to_string(MiscalibrationKind kind) {
  switch (kind) {
    case MiscalibrationKind::overestimation:
      return "overestimation";
    case MiscalibrationKind::underestimation:
      return "underestimation";
    case MiscalibrationKind::overfitting:
      return "overfitting";
    case MiscalibrationKind::underfitting:
      return "underfitting";
  }
  return "unknown";
}

std::string to_string(MiscalibrationDegree degree) {
  return degree == MiscalibrationDegree::mild ? "mild" : "severe";
}

}  // namespace tailored

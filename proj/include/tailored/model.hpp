#pragma once

// Domain types and the pure math of tailored Bayesian logistic regression:
// target thresholds from utilities, tailoring weights, the weighted
// log-likelihood, Gaussian log-prior and the unnormalized log-posterior.
//
// Everything here is immutable after construction and every free function is
// pure, so all of it may be shared across threads.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tailored/matrix.hpp"

namespace tailored {

/// Labeled rows with an explicit all-ones intercept column in front.
class Dataset {
 public:
  Dataset() = default;

  /// `design` must already carry the intercept column; it is validated.
  Dataset(std::vector<int> outcomes, Matrix design, std::vector<std::string> covariate_names = {});

  /// Builds a dataset from raw covariates (n x d), prepending the intercept.
  static Dataset with_intercept(std::vector<int> outcomes, const Matrix& covariates,
                                std::vector<std::string> covariate_names = {});

  std::size_t n() const { return outcomes_.size(); }
  /// Covariate count, excluding the intercept.
  std::size_t d() const { return design_.cols() - 1; }
  /// Coefficient dimension d + 1.
  std::size_t dim() const { return design_.cols(); }

  const std::vector<int>& outcomes() const { return outcomes_; }
  int outcome(std::size_t i) const { return outcomes_[i]; }
  const Matrix& design() const { return design_; }
  std::span<const double> row(std::size_t i) const { return design_.row(i); }

  const std::vector<std::string>& covariate_names() const { return names_; }
  /// Covariate names with "(Intercept)" in front, one per coefficient.
  std::vector<std::string> coefficient_names() const;

  double prevalence() const;
  std::size_t positives() const;

  Dataset subset(std::span<const std::size_t> indices) const;
  static Dataset concat(const Dataset& a, const Dataset& b);

 private:
  std::vector<int> outcomes_;
  Matrix design_;
  std::vector<std::string> names_;
};

/// Column-wise z-scoring of the non-intercept covariates. Opt-in only.
struct Standardization {
  std::vector<double> means;
  std::vector<double> sds;

  static Standardization fit(const Dataset& data);
  Dataset apply(const Dataset& data) const;
};

struct UtilitySpec {
  double u_tp = 0.0;
  double u_fp = 0.0;
  double u_fn = 0.0;
  double u_tn = 0.0;

  double benefit() const { return u_tp - u_fn; }
  double harm() const { return u_tn - u_fp; }
};

/// Probability of clinical equipoise; strictly inside (0, 1).
class TargetThreshold {
 public:
  explicit TargetThreshold(double t);

  double value() const { return t_; }
  /// t / (1 - t), the harm-to-benefit ratio.
  double odds() const { return t_ / (1.0 - t_); }

  friend bool operator==(TargetThreshold, TargetThreshold) = default;

 private:
  double t_;
};

/// t = H / (H + B). Throws ConfigError for degenerate or out-of-range input.
TargetThreshold target_threshold(const UtilitySpec& spec);

struct ThresholdBand {
  double lower;
  double upper;
};

/// Maps an absolute-benefit band to target thresholds when treatment reduces
/// risk by a fixed relative amount: a patient at risk r gains r * rrr, so the
/// equipoise risk for benefit b is b / rrr.
ThresholdBand threshold_band_from_benefit(double min_benefit, double max_benefit,
                                          double relative_risk_reduction);

class DistanceFunction {
 public:
  enum class Kind { squared, epsilon_insensitive };

  static DistanceFunction squared() { return DistanceFunction(Kind::squared, 0.0); }
  static DistanceFunction epsilon_insensitive(double epsilon);

  Kind kind() const { return kind_; }
  double epsilon() const { return epsilon_; }

  double operator()(double probability, double t) const;

  /// "squared" or "eps:<value>".
  std::string to_string() const;
  static DistanceFunction parse(const std::string& text);

 private:
  DistanceFunction(Kind kind, double epsilon) : kind_(kind), epsilon_(epsilon) {}

  Kind kind_;
  double epsilon_;
};

struct TailoringConfig {
  TargetThreshold threshold;
  double lambda = 0.0;
  DistanceFunction distance = DistanceFunction::squared();
  std::vector<double> pi_u;

  void validate() const;
};

/// Per-datapoint tailoring weights, each in (0, 1].
class WeightVector {
 public:
  WeightVector() = default;
  explicit WeightVector(std::vector<double> weights);

  static WeightVector ones(std::size_t n) { return WeightVector(std::vector<double>(n, 1.0)); }

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> values() const { return weights_; }

  WeightVector subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<double> weights_;
};

struct GaussianPrior {
  std::vector<double> means;
  std::vector<double> sds;

  /// N(0, 100^2) on every coefficient, intercept included.
  static GaussianPrior vague(std::size_t dim, double sd = 100.0);

  std::size_t dim() const { return means.size(); }
  void validate() const;
};

double logistic(double eta);
/// log(sigma(eta)), stable for |eta| in the hundreds.
double log_sigmoid(double eta);

std::vector<double> linear_predictor(const Dataset& data, std::span<const double> beta);

WeightVector compute_weights(const TailoringConfig& config);
WeightVector compute_weights(std::span<const double> pi_u, TargetThreshold t, double lambda,
                             const DistanceFunction& distance);

/// Per-row logistic log-likelihood contributions l_i(beta).
std::vector<double> log_likelihood_terms(const Dataset& data, std::span<const double> beta);

double tailored_log_likelihood(const Dataset& data, std::span<const double> beta,
                               const WeightVector& weights);

double log_prior(std::span<const double> beta, const GaussianPrior& prior);

double log_posterior_unnormalized(const Dataset& data, std::span<const double> beta,
                                  const WeightVector& weights, const GaussianPrior& prior);

std::vector<double> log_posterior_gradient(const Dataset& data, std::span<const double> beta,
                                           const WeightVector& weights,
                                           const GaussianPrior& prior);

double effective_sample_size(const WeightVector& weights);

/// Callable log-density bound to one (data, weights, prior) triple. Holds
/// references: the bound objects must outlive it.
class TailoredPosterior {
 public:
  TailoredPosterior(const Dataset& data, const WeightVector& weights, const GaussianPrior& prior);

  std::size_t dim() const { return data_.dim(); }
  double operator()(std::span<const double> beta) const;

 private:
  const Dataset& data_;
  const WeightVector& weights_;
  const GaussianPrior& prior_;
};

}  // namespace tailored

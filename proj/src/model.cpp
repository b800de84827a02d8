#include "tailored/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "tailored/error.hpp"
#include "tailored/kernels.hpp"

namespace tailored {

Dataset::Dataset(std::vector<int> outcomes, Matrix design, std::vector<std::string> covariate_names)
    : outcomes_(std::move(outcomes)), design_(std::move(design)), names_(std::move(covariate_names)) {
  if (outcomes_.empty()) throw DataError("dataset must contain at least one row");
  if (design_.rows() != outcomes_.size()) {
    throw DimensionError("outcome count does not match covariate row count");
  }
  if (design_.cols() < 1) throw DimensionError("design matrix needs an intercept column");
  for (int y : outcomes_) {
    if (y != 0 && y != 1) throw DataError("outcomes must be 0 or 1");
  }
  for (std::size_t i = 0; i < design_.rows(); ++i) {
    if (design_(i, 0) != 1.0) throw DataError("intercept column must be identically 1");
    for (double v : design_.row(i)) {
      if (!std::isfinite(v)) throw DataError("covariates must be finite");
    }
  }
  if (names_.empty()) {
    for (std::size_t j = 1; j < design_.cols(); ++j) names_.push_back("x" + std::to_string(j));
  }
  if (names_.size() != d()) throw DimensionError("one covariate name per covariate column required");
}

Dataset Dataset::with_intercept(std::vector<int> outcomes, const Matrix& covariates,
                                std::vector<std::string> covariate_names) {
  Matrix design(covariates.rows(), covariates.cols() + 1);
  for (std::size_t i = 0; i < covariates.rows(); ++i) {
    design(i, 0) = 1.0;
    std::ranges::copy(covariates.row(i), design.row(i).begin() + 1);
  }
  return Dataset(std::move(outcomes), std::move(design), std::move(covariate_names));
}

std::vector<std::string> Dataset::coefficient_names() const {
  std::vector<std::string> out{"(Intercept)"};
  out.insert(out.end(), names_.begin(), names_.end());
  return out;
}

std::size_t Dataset::positives() const {
  return static_cast<std::size_t>(std::ranges::count(outcomes_, 1));
}

double Dataset::prevalence() const {
  return static_cast<double>(positives()) / static_cast<double>(n());
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<int> y;
  y.reserve(indices.size());
  Matrix design(0, 0);
  for (std::size_t idx : indices) {
    if (idx >= n()) throw DimensionError("subset index out of range");
    y.push_back(outcomes_[idx]);
    design.append_row(design_.row(idx));
  }
  return Dataset(std::move(y), std::move(design), names_);
}

Dataset Dataset::concat(const Dataset& a, const Dataset& b) {
  if (a.dim() != b.dim()) throw DimensionError("cannot concatenate datasets of different width");
  std::vector<int> y = a.outcomes_;
  y.insert(y.end(), b.outcomes_.begin(), b.outcomes_.end());
  Matrix design = a.design_;
  for (std::size_t i = 0; i < b.n(); ++i) design.append_row(b.row(i));
  return Dataset(std::move(y), std::move(design), a.names_);
}

Standardization Standardization::fit(const Dataset& data) {
  Standardization s;
  const double n = static_cast<double>(data.n());
  for (std::size_t j = 1; j < data.dim(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < data.n(); ++i) mean += data.design()(i, j);
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < data.n(); ++i) {
      const double dev = data.design()(i, j) - mean;
      ss += dev * dev;
    }
    double sd = data.n() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    // constant columns are centred only
    if (!(sd > 0.0)) sd = 1.0;
    s.means.push_back(mean);
    s.sds.push_back(sd);
  }
  return s;
}

Dataset Standardization::apply(const Dataset& data) const {
  if (means.size() != data.d()) throw DimensionError("standardization width mismatch");
  Matrix design = data.design();
  for (std::size_t i = 0; i < design.rows(); ++i) {
    for (std::size_t j = 1; j < design.cols(); ++j) {
      design(i, j) = (design(i, j) - means[j - 1]) / sds[j - 1];
    }
  }
  return Dataset(data.outcomes(), std::move(design), data.covariate_names());
}

TargetThreshold::TargetThreshold(double t) : t_(t) {
  if (!(t > 0.0 && t < 1.0)) {
    std::ostringstream msg;
    msg << "target threshold must lie strictly inside (0, 1), got " << t;
    throw ConfigError(msg.str());
  }
}

TargetThreshold target_threshold(const UtilitySpec& spec) {
  const double b = spec.benefit();
  const double h = spec.harm();
  if (!(b + h > 0.0)) throw ConfigError("degenerate utilities: benefit + harm must be positive");
  const double t = h / (h + b);
  if (!(t > 0.0 && t < 1.0)) {
    throw ConfigError("utilities imply a target threshold outside (0, 1)");
  }
  return TargetThreshold(t);
}

ThresholdBand threshold_band_from_benefit(double min_benefit, double max_benefit,
                                          double relative_risk_reduction) {
  if (!(relative_risk_reduction > 0.0 && relative_risk_reduction <= 1.0)) {
    throw ConfigError("relative risk reduction must lie in (0, 1]");
  }
  if (!(min_benefit >= 0.0 && min_benefit <= max_benefit)) {
    throw ConfigError("benefit band must be ordered and non-negative");
  }
  return {min_benefit / relative_risk_reduction, max_benefit / relative_risk_reduction};
}

DistanceFunction DistanceFunction::epsilon_insensitive(double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("epsilon must be a finite non-negative number");
  }
  return DistanceFunction(Kind::epsilon_insensitive, epsilon);
}

double DistanceFunction::operator()(double probability, double t) const {
  const double gap = probability - t;
  if (kind_ == Kind::squared) return gap * gap;
  return std::max(std::abs(gap) - epsilon_, 0.0);
}

std::string DistanceFunction::to_string() const {
  if (kind_ == Kind::squared) return "squared";
  std::ostringstream out;
  out.precision(17);
  out << "eps:" << epsilon_;
  return out.str();
}

DistanceFunction DistanceFunction::parse(const std::string& text) {
  if (text == "squared") return squared();
  for (const std::string prefix : {"eps:", "epsilon:"}) {
    if (text.rfind(prefix, 0) == 0) {
      try {
        std::size_t used = 0;
        const std::string rest = text.substr(prefix.size());
        const double eps = std::stod(rest, &used);
        if (used != rest.size()) break;
        return epsilon_insensitive(eps);
      } catch (const std::logic_error&) {
        break;
      }
    }
  }
  throw ConfigError("unknown distance function '" + text + "' (use squared or eps:<value>)");
}

void TailoringConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
  for (double p : pi_u) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("first-stage probabilities must lie in [0, 1]");
  }
}

WeightVector::WeightVector(std::vector<double> weights) : weights_(std::move(weights)) {
  for (double w : weights_) {
    if (!(w >= 0.0 && w <= 1.0)) throw DataError("weights must lie in [0, 1]");
  }
}

WeightVector WeightVector::subset(std::span<const std::size_t> indices) const {
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t idx : indices) {
    if (idx >= weights_.size()) throw DimensionError("weight index out of range");
    out.push_back(weights_[idx]);
  }
  return WeightVector(std::move(out));
}

GaussianPrior GaussianPrior::vague(std::size_t dim, double sd) {
  return {std::vector<double>(dim, 0.0), std::vector<double>(dim, sd)};
}

void GaussianPrior::validate() const {
  if (means.size() != sds.size()) throw DimensionError("prior means and sds differ in length");
  for (double s : sds) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("prior sds must be positive and finite");
  }
  for (double m : means) {
    if (!std::isfinite(m)) throw ConfigError("prior means must be finite");
  }
}

double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double log_sigmoid(double eta) {
  return std::min(eta, 0.0) - std::log1p(std::exp(-std::abs(eta)));
}

namespace {

void check_beta(const Dataset& data, std::span<const double> beta) {
  if (beta.size() != data.dim()) throw DimensionError("coefficient vector length must be d + 1");
}

}  // namespace

std::vector<double> linear_predictor(const Dataset& data, std::span<const double> beta) {
  check_beta(data, beta);
  std::vector<double> eta(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto x = data.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += x[j] * beta[j];
    eta[i] = s;
  }
  return eta;
}

WeightVector compute_weights(std::span<const double> pi_u, TargetThreshold t, double lambda,
                             const DistanceFunction& distance) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
  std::vector<double> w(pi_u.size());
  for (std::size_t i = 0; i < pi_u.size(); ++i) {
    if (!(pi_u[i] >= 0.0 && pi_u[i] <= 1.0)) {
      throw ConfigError("first-stage probabilities must lie in [0, 1]");
    }
    // soft exclusion only: an underflowing exponential keeps the smallest
    // positive weight
    w[i] = std::max(std::exp(-lambda * distance(pi_u[i], t.value())),
                    std::numeric_limits<double>::denorm_min());
  }
  return WeightVector(std::move(w));
}

WeightVector compute_weights(const TailoringConfig& config) {
  config.validate();
  return compute_weights(config.pi_u, config.threshold, config.lambda, config.distance);
}

std::vector<double> log_likelihood_terms(const Dataset& data, std::span<const double> beta) {
  const auto eta = linear_predictor(data, beta);
  std::vector<double> terms(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) {
    terms[i] = data.outcome(i) == 1 ? log_sigmoid(eta[i]) : log_sigmoid(-eta[i]);
  }
  return terms;
}

double tailored_log_likelihood(const Dataset& data, std::span<const double> beta,
                               const WeightVector& weights) {
  check_beta(data, beta);
  if (weights.size() != data.n()) throw DimensionError("one weight per row required");
  const double ll = kernels::weighted_log_likelihood(data, beta, weights.values());
  if (!std::isfinite(ll)) throw SamplerError("non-finite log-likelihood");
  return ll;
}

double log_prior(std::span<const double> beta, const GaussianPrior& prior) {
  if (beta.size() != prior.dim() || prior.sds.size() != prior.dim()) {
    throw DimensionError("prior dimension does not match coefficient vector");
  }
  constexpr double half_log_two_pi = 0.91893853320467274178;
  double lp = 0.0;
  for (std::size_t j = 0; j < beta.size(); ++j) {
    const double z = (beta[j] - prior.means[j]) / prior.sds[j];
    lp += -0.5 * z * z - std::log(prior.sds[j]) - half_log_two_pi;
  }
  return lp;
}

double log_posterior_unnormalized(const Dataset& data, std::span<const double> beta,
                                  const WeightVector& weights, const GaussianPrior& prior) {
  return tailored_log_likelihood(data, beta, weights) + log_prior(beta, prior);
}

std::vector<double> log_posterior_gradient(const Dataset& data, std::span<const double> beta,
                                           const WeightVector& weights,
                                           const GaussianPrior& prior) {
  check_beta(data, beta);
  if (weights.size() != data.n()) throw DimensionError("one weight per row required");
  if (prior.dim() != beta.size()) throw DimensionError("prior dimension does not match coefficients");
  std::vector<double> grad(beta.size(), 0.0);
  kernels::weighted_score(data, beta, weights.values(), grad);
  for (std::size_t j = 0; j < beta.size(); ++j) {
    grad[j] -= (beta[j] - prior.means[j]) / (prior.sds[j] * prior.sds[j]);
  }
  return grad;
}

double effective_sample_size(const WeightVector& weights) {
  double s = 0.0;
  for (double w : weights.values()) s += w;
  return s;
}

TailoredPosterior::TailoredPosterior(const Dataset& data, const WeightVector& weights,
                                     const GaussianPrior& prior)
    : data_(data), weights_(weights), prior_(prior) {
  if (weights_.size() != data_.n()) throw DimensionError("one weight per row required");
  prior_.validate();
  if (prior_.dim() != data_.dim()) throw DimensionError("prior dimension does not match data");
}

double TailoredPosterior::operator()(std::span<const double> beta) const {
  // non-finite values pass through; run_mh rejects them
  return kernels::weighted_log_likelihood(data_, beta, weights_.values()) + log_prior(beta, prior_);
}

}  // namespace tailored

#include "tailored/predict.hpp"

#include <algorithm>
#include <cmath>

#include "tailored/error.hpp"
#include "tailored/kernels.hpp"

namespace tailored {

PredictiveResult posterior_predictive(std::span<const double> x_star, const PosteriorSamples& samples) {
  if (samples.size() == 0) throw DataError("posterior predictive needs at least one draw");
  if (x_star.size() != samples.dim()) throw DimensionError("covariate row does not match coefficients");

  PredictiveResult result;
  result.probability_draws.reserve(samples.size());
  double sum = 0.0;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto beta = samples.draws.row(s);
    double eta = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j) eta += x_star[j] * beta[j];
    const double p = logistic(eta);
    result.probability_draws.push_back(p);
    sum += p;
  }
  const double s = static_cast<double>(samples.size());
  result.mean_probability = sum / s;
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double p : result.probability_draws) {
      ss += (p - result.mean_probability) * (p - result.mean_probability);
    }
    result.predictive_sd = std::sqrt(ss / (s - 1.0));
  }
  return result;
}

std::vector<double> predictive_means(const Dataset& data, const PosteriorSamples& samples) {
  if (samples.size() == 0) throw DataError("posterior predictive needs at least one draw");
  if (data.dim() != samples.dim()) throw DimensionError("data width does not match coefficients");
  std::vector<double> out(data.n());
  kernels::predictive_means(data.design(), samples.draws, out);
  return out;
}

Classification classify(double prob, TargetThreshold t) {
  return prob >= t.value() ? Classification::positive : Classification::negative;
}

std::string to_string(Classification c) {
  return c == Classification::positive ? "positive" : "negative";
}

std::vector<std::size_t> predictive_histogram(const PredictiveResult& result, std::size_t bins) {
  if (bins == 0) throw ConfigError("histogram needs at least one bin");
  std::vector<std::size_t> counts(bins, 0);
  for (double p : result.probability_draws) {
    const auto b = std::min(static_cast<std::size_t>(p * static_cast<double>(bins)), bins - 1);
    ++counts[b];
  }
  return counts;
}

}  // namespace tailored

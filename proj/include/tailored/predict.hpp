#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tailored/model.hpp"
#include "tailored/sampler.hpp"

namespace tailored {

struct PredictiveResult {
  double mean_probability = 0.0;
  std::vector<double> probability_draws;
  double predictive_sd = 0.0;
};

/// Averages sigma(x^T beta_s) over the retained draws. `x_star` includes the
/// intercept entry.
PredictiveResult posterior_predictive(std::span<const double> x_star, const PosteriorSamples& samples);

/// Posterior predictive mean for every row of `data`.
std::vector<double> predictive_means(const Dataset& data, const PosteriorSamples& samples);

enum class Classification { negative, positive };

/// Positive iff prob >= t.
Classification classify(double prob, TargetThreshold t);

std::string to_string(Classification c);

/// Equal-width histogram of the predictive draws over [0, 1].
std::vector<std::size_t> predictive_histogram(const PredictiveResult& result, std::size_t bins);

}  // namespace tailored

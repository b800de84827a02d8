#pragma once

// Generators for the three synthetic benchmarks, their true-probability
// oracles, and optimal decision boundaries.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tailored/evaluation.hpp"
#include "tailored/model.hpp"
#include "tailored/predict.hpp"

namespace tailored {

struct SimulatedData {
  Dataset data;
  /// P(y = 1 | x) under the uncontaminated generating model.
  std::vector<double> true_probability;
  /// Rows appended as contamination (simulation 3 only).
  std::vector<bool> contaminated;
};

/// x1, x2 ~ U(0, 1); P(y = 1 | x) = q x2 / (x1 + q x2).
struct Sim1Config {
  std::size_t n = 5000;
  double q = 1.0;
  std::uint64_t seed = 1;
};

/// Two Gaussian classes: y = 1 ~ N((1, 0), diag(1, 2)), y = 0 ~ N((0, 1), diag(2, 1)).
struct Sim2Config {
  std::size_t n = 5000;
  std::uint64_t seed = 1;
  double prior_positive = 0.5;
};

/// Logistic model on standard-normal covariates, plus floor(psi * n) appended
/// rows labelled 0 with covariates ~ N(1.5, 0.5) (0.5 is the sd).
struct Sim3Config {
  std::size_t n = 1000;
  double psi = 0.0;
  std::vector<double> beta{0.0, 2.0, 3.0};
  double contaminant_mean = 1.5;
  double contaminant_sd = 0.5;
  std::uint64_t seed = 1;
  /// Generate without contamination (test sets).
  bool clean = false;
};

SimulatedData generate_sim1(const Sim1Config& config);
SimulatedData generate_sim2(const Sim2Config& config);
SimulatedData generate_sim3(const Sim3Config& config);

using Oracle = std::function<double(double x1, double x2)>;

double sim1_probability(double x1, double x2, double q);
double sim2_probability(double x1, double x2, double prior_positive);

Oracle sim1_oracle(double q);
Oracle sim2_oracle(double prior_positive);
Oracle sim3_oracle(std::vector<double> beta);

/// Slope of the simulation-1 optimal boundary written as x2 = slope * x1.
/// theta = t  <=>  q (1 - t) x2 = t x1.
double sim1_boundary_slope(double q, double t);

/// Slope of the level set beta0 + beta1 x1 + beta2 x2 = const, as x2 against x1.
double linear_boundary_slope(std::span<const double> beta);

struct Point {
  double x1 = 0.0;
  double x2 = 0.0;
};

struct Box {
  double x1_min = 0.0;
  double x1_max = 1.0;
  double x2_min = 0.0;
  double x2_max = 1.0;
};

/// Points where the oracle crosses t, scanning each of `resolution` x1
/// columns along x2 and interpolating linearly between grid nodes.
std::vector<Point> level_set(const Oracle& oracle, double t, const Box& box, std::size_t resolution);

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
};

/// Ordinary least squares of x2 on x1.
LineFit fit_line(std::span<const Point> points);

/// Classifier thresholding the oracle probability at t.
std::function<Classification(double, double)> optimal_boundary(Oracle oracle, TargetThreshold t);

/// NB of the oracle classifier on a labelled set with known probabilities.
NetBenefitReport optimal_nb(std::span<const double> true_probability, std::span<const int> outcomes,
                            TargetThreshold t);

}  // namespace tailored

#include "tailored/simulation.hpp"

#include <cmath>
#include <random>

#include "tailored/error.hpp"

namespace tailored {

namespace {

int bernoulli(std::mt19937_64& rng, double p) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < p ? 1 : 0;
}

double log_normal_pdf(double x, double mean, double var) {
  constexpr double log_two_pi = 1.8378770664093454836;
  const double d = x - mean;
  return -0.5 * (log_two_pi + std::log(var) + d * d / var);
}

}  // namespace

double sim1_probability(double x1, double x2, double q) {
  const double denom = x1 + q * x2;
  if (denom == 0.0) return 0.5;
  return q * x2 / denom;
}

SimulatedData generate_sim1(const Sim1Config& config) {
  if (config.n == 0) throw ConfigError("simulation needs n >= 1");
  if (!(config.q > 0.0)) throw ConfigError("simulation 1 needs q > 0");
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix x(config.n, 2);
  std::vector<int> y(config.n);
  SimulatedData out;
  out.true_probability.resize(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    x(i, 0) = unit(rng);
    x(i, 1) = unit(rng);
    const double theta = sim1_probability(x(i, 0), x(i, 1), config.q);
    out.true_probability[i] = theta;
    y[i] = bernoulli(rng, theta);
  }
  out.data = Dataset::with_intercept(std::move(y), x, {"x1", "x2"});
  out.contaminated.assign(config.n, false);
  return out;
}

double sim2_probability(double x1, double x2, double prior_positive) {
  const double log_f1 = log_normal_pdf(x1, 1.0, 1.0) + log_normal_pdf(x2, 0.0, 2.0);
  const double log_f0 = log_normal_pdf(x1, 0.0, 2.0) + log_normal_pdf(x2, 1.0, 1.0);
  const double eta = std::log(prior_positive) - std::log1p(-prior_positive) + log_f1 - log_f0;
  return logistic(eta);
}

SimulatedData generate_sim2(const Sim2Config& config) {
  if (config.n == 0) throw ConfigError("simulation needs n >= 1");
  if (!(config.prior_positive > 0.0 && config.prior_positive < 1.0)) {
    throw ConfigError("simulation 2 class prior must lie in (0, 1)");
  }
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(config.n, 2);
  std::vector<int> y(config.n);
  SimulatedData out;
  out.true_probability.resize(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    y[i] = bernoulli(rng, config.prior_positive);
    if (y[i] == 1) {
      x(i, 0) = 1.0 + normal(rng);
      x(i, 1) = std::sqrt(2.0) * normal(rng);
    } else {
      x(i, 0) = std::sqrt(2.0) * normal(rng);
      x(i, 1) = 1.0 + normal(rng);
    }
    out.true_probability[i] = sim2_probability(x(i, 0), x(i, 1), config.prior_positive);
  }
  out.data = Dataset::with_intercept(std::move(y), x, {"x1", "x2"});
  out.contaminated.assign(config.n, false);
  return out;
}

SimulatedData generate_sim3(const Sim3Config& config) {
  if (config.n == 0) throw ConfigError("simulation needs n >= 1");
  if (!(config.psi >= 0.0 && config.psi < 0.5)) throw ConfigError("contamination fraction must lie in [0, 0.5)");
  if (config.beta.size() < 2) throw ConfigError("simulation 3 needs an intercept and at least one slope");
  if (!(config.contaminant_sd > 0.0)) throw ConfigError("contaminant sd must be positive");

  const std::size_t d = config.beta.size() - 1;
  const std::size_t n_bad =
      config.clean ? 0 : static_cast<std::size_t>(std::floor(config.psi * config.n + 1e-9));
  const std::size_t total = config.n + n_bad;

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(total, d);
  std::vector<int> y(total);
  SimulatedData out;
  out.true_probability.resize(total);
  out.contaminated.assign(total, false);

  auto oracle = [&](std::size_t i) {
    double eta = config.beta[0];
    for (std::size_t j = 0; j < d; ++j) eta += config.beta[j + 1] * x(i, j);
    return logistic(eta);
  };

  for (std::size_t i = 0; i < config.n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x(i, j) = normal(rng);
    out.true_probability[i] = oracle(i);
    y[i] = bernoulli(rng, out.true_probability[i]);
  }
  for (std::size_t i = config.n; i < total; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      x(i, j) = config.contaminant_mean + config.contaminant_sd * normal(rng);
    }
    out.true_probability[i] = oracle(i);
    y[i] = 0;
    out.contaminated[i] = true;
  }

  std::vector<std::string> names;
  for (std::size_t j = 1; j <= d; ++j) names.push_back("x" + std::to_string(j));
  out.data = Dataset::with_intercept(std::move(y), x, std::move(names));
  return out;
}

Oracle sim1_oracle(double q) {
  return [q](double x1, double x2) { return sim1_probability(x1, x2, q); };
}

Oracle sim2_oracle(double prior_positive) {
  return [prior_positive](double x1, double x2) { return sim2_probability(x1, x2, prior_positive); };
}

Oracle sim3_oracle(std::vector<double> beta) {
  if (beta.size() != 3) throw ConfigError("the two-covariate oracle needs three coefficients");
  return [beta = std::move(beta)](double x1, double x2) {
    return logistic(beta[0] + beta[1] * x1 + beta[2] * x2);
  };
}

double sim1_boundary_slope(double q, double t) {
  if (!(q > 0.0)) throw ConfigError("q must be positive");
  return t / (q * (1.0 - t));
}

double linear_boundary_slope(std::span<const double> beta) {
  if (beta.size() != 3) throw DimensionError("boundary slope needs exactly three coefficients");
  if (beta[2] == 0.0) throw DataError("boundary is vertical (zero x2 coefficient)");
  return -beta[1] / beta[2];
}

std::vector<Point> level_set(const Oracle& oracle, double t, const Box& box, std::size_t resolution) {
  if (resolution < 2) throw ConfigError("level-set grid needs at least two nodes per axis");
  std::vector<Point> points;
  const double dx1 = (box.x1_max - box.x1_min) / static_cast<double>(resolution - 1);
  const double dx2 = (box.x2_max - box.x2_min) / static_cast<double>(resolution - 1);
  for (std::size_t i = 0; i < resolution; ++i) {
    const double x1 = box.x1_min + dx1 * static_cast<double>(i);
    double prev = oracle(x1, box.x2_min) - t;
    for (std::size_t j = 1; j < resolution; ++j) {
      const double x2 = box.x2_min + dx2 * static_cast<double>(j);
      const double cur = oracle(x1, x2) - t;
      if ((prev < 0.0) != (cur < 0.0)) {
        const double frac = prev / (prev - cur);
        points.push_back({x1, x2 - dx2 + frac * dx2});
      }
      prev = cur;
    }
  }
  return points;
}

LineFit fit_line(std::span<const Point> points) {
  if (points.size() < 2) throw DataError("line fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (const auto& p : points) {
    mx += p.x1;
    my += p.x2;
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    sxx += (p.x1 - mx) * (p.x1 - mx);
    sxy += (p.x1 - mx) * (p.x2 - my);
  }
  if (sxx == 0.0) throw DataError("line fit needs distinct x1 values");
  const double slope = sxy / sxx;
  return {my - slope * mx, slope};
}

std::function<Classification(double, double)> optimal_boundary(Oracle oracle, TargetThreshold t) {
  return [oracle = std::move(oracle), t](double x1, double x2) { return classify(oracle(x1, x2), t); };
}

NetBenefitReport optimal_nb(std::span<const double> true_probability, std::span<const int> outcomes,
                            TargetThreshold t) {
  return net_benefit(true_probability, outcomes, t);
}

}  // namespace tailored

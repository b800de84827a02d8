#include "tailored/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "tailored/model.hpp"

namespace tailored::kernels {

namespace {

inline double dot(std::span<const double> x, std::span<const double> beta) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += x[j] * beta[j];
  return s;
}

// log sigma(eta) for y = 1 and log sigma(-eta) for y = 0, without branches
inline double row_log_likelihood(int y, double eta) {
  const double signed_eta = y == 1 ? eta : -eta;
  return std::min(signed_eta, 0.0) - std::log1p(std::exp(-std::abs(eta)));
}

std::size_t block_count(std::size_t n) { return (n + kBlockRows - 1) / kBlockRows; }

// Nested calls (e.g. from inside the parallel CV grid) stay on one thread.
bool go_parallel(std::size_t blocks) { return blocks > 1 && !omp_in_parallel(); }

}  // namespace

double weighted_log_likelihood(const Dataset& data, std::span<const double> beta,
                               std::span<const double> weights) {
  const std::size_t n = data.n();
  const std::size_t blocks = block_count(n);
  std::vector<double> partial(blocks, 0.0);

#pragma omp parallel for schedule(static) if (go_parallel(blocks))
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t end = std::min(n, (b + 1) * kBlockRows);
    double s = 0.0;
    for (std::size_t i = b * kBlockRows; i < end; ++i) {
      s += weights[i] * row_log_likelihood(data.outcome(i), dot(data.row(i), beta));
    }
    partial[b] = s;
  }

  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

double weighted_log_likelihood_serial(const Dataset& data, std::span<const double> beta,
                                      std::span<const double> weights) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    total += weights[i] * row_log_likelihood(data.outcome(i), dot(data.row(i), beta));
  }
  return total;
}

void weighted_score(const Dataset& data, std::span<const double> beta,
                    std::span<const double> weights, std::span<double> out) {
  const std::size_t n = data.n();
  const std::size_t dim = data.dim();
  const std::size_t blocks = block_count(n);
  std::vector<double> partial(blocks * dim, 0.0);

#pragma omp parallel for schedule(static) if (go_parallel(blocks))
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t end = std::min(n, (b + 1) * kBlockRows);
    double* acc = partial.data() + b * dim;
    for (std::size_t i = b * kBlockRows; i < end; ++i) {
      const auto x = data.row(i);
      const double resid = weights[i] * (data.outcome(i) - logistic(dot(x, beta)));
      for (std::size_t j = 0; j < dim; ++j) acc[j] += resid * x[j];
    }
  }

  std::ranges::fill(out, 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t j = 0; j < dim; ++j) out[j] += partial[b * dim + j];
  }
}

void weighted_score_serial(const Dataset& data, std::span<const double> beta,
                           std::span<const double> weights, std::span<double> out) {
  std::ranges::fill(out, 0.0);
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto x = data.row(i);
    const double resid = weights[i] * (data.outcome(i) - logistic(dot(x, beta)));
    for (std::size_t j = 0; j < x.size(); ++j) out[j] += resid * x[j];
  }
}

void predictive_means(const Matrix& design, const Matrix& draws, std::span<double> out) {
  const std::size_t n = design.rows();
  const std::size_t s = draws.rows();
  const auto rows = static_cast<std::ptrdiff_t>(n);

#pragma omp parallel for schedule(static) if (n > kBlockRows && !omp_in_parallel())
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto x = design.row(static_cast<std::size_t>(i));
    double acc = 0.0;
    for (std::size_t k = 0; k < s; ++k) acc += logistic(dot(x, draws.row(k)));
    out[static_cast<std::size_t>(i)] = acc / static_cast<double>(s);
  }
}

void predictive_means_serial(const Matrix& design, const Matrix& draws, std::span<double> out) {
  for (std::size_t i = 0; i < design.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < draws.rows(); ++k) acc += logistic(dot(design.row(i), draws.row(k)));
    out[i] = acc / static_cast<double>(draws.rows());
  }
}

}  // namespace tailored::kernels

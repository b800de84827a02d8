#pragma once

// Row-parallel kernels behind the model and predict modules.
//
// Each kernel comes in two flavours: an OpenMP version used by the library,
// and a plain serial loop kept as the reference the tests and benchmarks
// compare against. The OpenMP reductions accumulate fixed-size row blocks and
// then add the block partials in block order, so the result does not depend
// on the thread count or schedule and MCMC chains stay bit-reproducible.

#include <cstddef>
#include <span>

#include "tailored/matrix.hpp"

namespace tailored {
class Dataset;
}

namespace tailored::kernels {

inline constexpr std::size_t kBlockRows = 256;

/// Sum_i w_i * l_i(beta).
double weighted_log_likelihood(const Dataset& data, std::span<const double> beta,
                               std::span<const double> weights);
double weighted_log_likelihood_serial(const Dataset& data, std::span<const double> beta,
                                      std::span<const double> weights);

/// Gradient of the weighted log-likelihood, written into `out` (length dim).
void weighted_score(const Dataset& data, std::span<const double> beta,
                    std::span<const double> weights, std::span<double> out);
void weighted_score_serial(const Dataset& data, std::span<const double> beta,
                           std::span<const double> weights, std::span<double> out);

/// Posterior predictive mean per design row: mean over draws of sigma(x^T beta_s).
void predictive_means(const Matrix& design, const Matrix& draws, std::span<double> out);
void predictive_means_serial(const Matrix& design, const Matrix& draws, std::span<double> out);

}  // namespace tailored::kernels

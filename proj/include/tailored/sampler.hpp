#pragma once

// Random-walk Metropolis-Hastings with isotropic Gaussian proposals and a
// burn-in-only Robbins-Monro adaptation of the proposal scale, plus
// posterior summaries (mean, median, HPD intervals).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tailored/matrix.hpp"

namespace tailored {

using LogDensity = std::function<double(std::span<const double>)>;

struct SamplerConfig {
  std::size_t n_iterations = 20000;
  std::size_t burn_in = 5000;
  std::size_t thin = 1;
  double initial_sd = 0.1;
  double target_acceptance = 0.24;
  bool adapt_during_burn_in = true;
  std::uint64_t rng_seed = 1;
  /// Empty means start at the zero vector.
  std::vector<double> initial_beta;

  void validate() const;
  /// Number of retained draws, floor((n_iterations - burn_in) / thin).
  std::size_t retained() const { return (n_iterations - burn_in) / thin; }
};

inline constexpr std::size_t kAdaptBatchSize = 50;
inline constexpr double kMinProposalSd = 1e-8;
inline constexpr double kMaxProposalSd = 1e3;

struct PosteriorSamples {
  Matrix draws;  // S x dim, one retained draw per row
  double acceptance_rate = 0.0;
  double final_proposal_sd = 0.0;
  std::uint64_t rng_seed = 0;
  std::vector<double> log_posterior_trace;
  /// Proposal sd in force at each retained draw.
  std::vector<double> proposal_sd_trace;
  /// Proposals rejected because the log-density was not finite.
  std::size_t nonfinite_rejections = 0;

  std::size_t size() const { return draws.rows(); }
  std::size_t dim() const { return draws.cols(); }
  std::vector<double> mean() const;
};

/// One Robbins-Monro step: sd * exp(k^-0.6 * (batch_acceptance - target)),
/// clamped to [kMinProposalSd, kMaxProposalSd]. `batch_index` counts from 1.
double adapt_proposal_sd(double current_sd, double batch_acceptance, std::size_t batch_index,
                         double target_acceptance = 0.24);

/// Runs one chain of `dim` parameters. Throws SamplerError when the
/// log-density is not finite at the starting point.
PosteriorSamples run_mh(const LogDensity& log_density, std::size_t dim, const SamplerConfig& config);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double width() const { return upper - lower; }
};

/// Shortest window of sorted draws holding ceil(mass * S) of them.
Interval hpd_interval(std::span<const double> draws, double mass);

struct CoefficientSummary {
  double mean = 0.0;
  double median = 0.0;
  Interval hpd90;
  Interval hpd95;
  /// Interval at the caller's requested mass.
  Interval hpd;
  double mc_standard_error = 0.0;
};

struct HpdSummary {
  double mass = 0.9;
  std::vector<CoefficientSummary> coefficients;
};

inline constexpr std::size_t kMinSummaryDraws = 100;

HpdSummary summarize(const PosteriorSamples& samples, double mass = 0.9);

/// Batch-means Monte-Carlo standard error of the mean of a (correlated) chain.
double batch_means_standard_error(std::span<const double> chain);

/// Potential scale reduction factor per coefficient across chains of equal
/// length (at least two chains).
std::vector<double> gelman_rubin(std::span<const PosteriorSamples> chains);

/// Writes draws as CSV: header = coefficient names, one row per draw.
void write_draws_csv(const std::string& path, const PosteriorSamples& samples,
                     const std::vector<std::string>& names);
PosteriorSamples read_draws_csv(const std::string& path, std::vector<std::string>* names = nullptr);

}  // namespace tailored

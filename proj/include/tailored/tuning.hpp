#pragma once

// The two-stage tailoring pipeline: design/development splitting, a
// standard-Bayes first stage that supplies pi_u, stratified K-fold
// cross-validation of lambda by Net Benefit, and the final development fit.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tailored/evaluation.hpp"
#include "tailored/model.hpp"
#include "tailored/sampler.hpp"

namespace tailored {

struct SplitPlan {
  double design_fraction = 0.2;
  double test_fraction = 0.0;
  std::uint64_t seed = 0;
  // sorted row indices into the input dataset
  std::vector<std::size_t> design;
  std::vector<std::size_t> development;
  std::vector<std::size_t> test;
};

/// Random partition of n rows. The test set takes floor(test_fraction * n)
/// rows, development takes floor((1 - design_fraction) * remaining) and
/// design the rest. Throws DataError when a requested partition is empty.
SplitPlan make_split(std::size_t n, double design_fraction, double test_fraction, std::uint64_t seed);

struct CvPlan {
  std::size_t folds = 5;
  std::vector<double> lambda_grid;
  std::uint64_t seed = 0;
  /// Fold (0-based) of every development row.
  std::vector<std::size_t> fold_of;

  std::vector<std::size_t> training_indices(std::size_t fold) const;
  std::vector<std::size_t> held_out_indices(std::size_t fold) const;
};

std::vector<double> default_lambda_grid();

/// Sorts, removes duplicates and makes sure 0 is present.
std::vector<double> normalize_lambda_grid(std::vector<double> grid);

/// Stratified assignment: positives and negatives are shuffled separately and
/// dealt round-robin, so each fold's positive count is within one of n_pos / K.
CvPlan make_cv_plan(std::span<const int> outcomes, std::size_t folds, std::vector<double> lambda_grid,
                    std::uint64_t seed);

inline constexpr double kDefaultEssFloor = 0.10;

struct PipelineConfig {
  double design_fraction = 0.2;
  std::uint64_t split_seed = 1;
  std::size_t folds = 5;
  std::uint64_t cv_seed = 2;
  std::vector<double> lambda_grid = default_lambda_grid();
  DistanceFunction distance = DistanceFunction::squared();
  double prior_sd = 100.0;
  /// rng_seed drives the stage-1 and final fits; CV fold k (1-based) uses rng_seed + k.
  SamplerConfig sampler;
  /// First-stage probabilities for every training row; skips the design split.
  std::optional<std::vector<double>> external_pi_u;
  double ess_floor = kDefaultEssFloor;

  void validate() const;
};

/// Standard (unweighted) Bayesian logistic regression under N(0, prior_sd^2) priors.
PosteriorSamples fit_standard(const Dataset& data, double prior_sd, const SamplerConfig& sampler);

/// Tailored fit with the given weights.
PosteriorSamples fit_tailored(const Dataset& data, const WeightVector& weights, double prior_sd,
                              const SamplerConfig& sampler);

struct Stage1Result {
  SplitPlan split;
  bool external = false;
  /// Stage-1 posterior on the design rows; empty when pi_u came from outside.
  PosteriorSamples samples;
  /// pi_u for each development row, aligned with split.development.
  std::vector<double> pi_u_development;
};

/// Splits `train` and estimates pi_u for the development rows.
Stage1Result run_stage1(const Dataset& train, const PipelineConfig& config);

struct CvCell {
  double lambda = 0.0;
  std::size_t fold = 0;
  bool ok = false;
  double net_benefit = 0.0;
  double ess = 0.0;
  std::string error;
};

struct CvResult {
  std::vector<CvCell> cells;  // lambda-major, fold-minor
  /// Fold-averaged NB per grid entry; NaN when too few folds succeeded.
  std::vector<double> mean_net_benefit;
  std::vector<std::size_t> successful_folds;
  double lambda_star = 0.0;
  std::vector<std::string> warnings;
};

/// Scores every (lambda, fold) cell and returns the lambda maximizing the
/// fold-averaged NB, ties going to the smallest lambda. The grid runs in
/// parallel; the result does not depend on thread count.
CvResult cv_select_lambda(const Dataset& development, std::span<const double> pi_u, TargetThreshold t,
                          const CvPlan& plan, const SamplerConfig& sampler,
                          const DistanceFunction& distance, double prior_sd);

struct EssRow {
  double lambda = 0.0;
  double ess = 0.0;
  double ess_fraction = 0.0;
  bool below_floor = false;
};

std::vector<EssRow> ess_grid(std::span<const double> pi_u, TargetThreshold t,
                             std::span<const double> lambda_grid,
                             const DistanceFunction& distance = DistanceFunction::squared(),
                             double floor = kDefaultEssFloor);

struct FittedTailoredModel {
  double lambda_star = 0.0;
  TargetThreshold t{0.5};
  Stage1Result stage1;
  CvPlan cv_plan;
  CvResult cv;
  PosteriorSamples samples;
  WeightVector final_weights;
  double ess = 0.0;
  double ess_fraction = 0.0;
  std::vector<EssRow> ess_table;
  std::vector<std::string> warnings;
};

/// Stage two given a finished stage one: CV over lambda on the development
/// rows, then the final fit on all development rows at lambda*.
FittedTailoredModel fit_stage2(const Dataset& train, const Stage1Result& stage1, TargetThreshold t,
                               const PipelineConfig& config);

/// Full pipeline: split, stage 1, weights, CV, final fit.
FittedTailoredModel fit_pipeline(const Dataset& train, TargetThreshold t, const PipelineConfig& config);

/// 64-bit FNV-1a over index values, for manifests.
std::uint64_t index_digest(std::span<const std::size_t> indices);

}  // namespace tailored

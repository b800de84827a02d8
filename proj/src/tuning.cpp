#include "tailored/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "tailored/error.hpp"
#include "tailored/predict.hpp"

namespace tailored {

SplitPlan make_split(std::size_t n, double design_fraction, double test_fraction, std::uint64_t seed) {
  if (!(design_fraction > 0.0 && design_fraction < 1.0)) {
    throw ConfigError("design fraction must lie in (0, 1)");
  }
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test fraction must lie in [0, 1)");
  }
  // slack absorbs representation error, e.g. 0.8 * 10 -> 8
  constexpr double slack = 1e-9;
  const auto test_size = static_cast<std::size_t>(std::floor(test_fraction * n + slack));
  const std::size_t train_size = n - test_size;
  const auto dev_size =
      static_cast<std::size_t>(std::floor((1.0 - design_fraction) * train_size + slack));
  const std::size_t design_size = train_size - dev_size;
  if (design_size == 0 || dev_size == 0 || (test_fraction > 0.0 && test_size == 0)) {
    throw DataError("split of " + std::to_string(n) + " rows leaves an empty partition");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  SplitPlan plan;
  plan.design_fraction = design_fraction;
  plan.test_fraction = test_fraction;
  plan.seed = seed;
  plan.test.assign(order.begin(), order.begin() + test_size);
  plan.design.assign(order.begin() + test_size, order.begin() + test_size + design_size);
  plan.development.assign(order.begin() + test_size + design_size, order.end());
  std::ranges::sort(plan.test);
  std::ranges::sort(plan.design);
  std::ranges::sort(plan.development);
  return plan;
}

std::vector<std::size_t> CvPlan::training_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> CvPlan::held_out_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<double> default_lambda_grid() { return {0, 1, 2, 5, 10, 25, 50, 100}; }

std::vector<double> normalize_lambda_grid(std::vector<double> grid) {
  for (double l : grid) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("lambda grid values must be finite and >= 0");
  }
  grid.push_back(0.0);
  std::ranges::sort(grid);
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

CvPlan make_cv_plan(std::span<const int> outcomes, std::size_t folds, std::vector<double> lambda_grid,
                    std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cross-validation needs at least two folds");
  if (outcomes.size() < folds) throw DataError("fewer development rows than folds");
  CvPlan plan;
  plan.folds = folds;
  plan.lambda_grid = normalize_lambda_grid(std::move(lambda_grid));
  plan.seed = seed;
  plan.fold_of.assign(outcomes.size(), 0);

  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    (outcomes[i] == 1 ? positives : negatives).push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(positives.begin(), positives.end(), rng);
  std::shuffle(negatives.begin(), negatives.end(), rng);

  std::size_t slot = 0;
  for (std::size_t idx : positives) plan.fold_of[idx] = slot++ % folds;
  for (std::size_t idx : negatives) plan.fold_of[idx] = slot++ % folds;
  return plan;
}

void PipelineConfig::validate() const {
  if (!external_pi_u && !(design_fraction > 0.0 && design_fraction < 1.0)) {
    throw ConfigError("design fraction must lie in (0, 1)");
  }
  if (folds < 2) throw ConfigError("cross-validation needs at least two folds");
  if (!(prior_sd > 0.0) || !std::isfinite(prior_sd)) throw ConfigError("prior sd must be positive");
  if (!(ess_floor >= 0.0 && ess_floor <= 1.0)) throw ConfigError("ESS floor must lie in [0, 1]");
  normalize_lambda_grid(lambda_grid);
  sampler.validate();
}

PosteriorSamples fit_tailored(const Dataset& data, const WeightVector& weights, double prior_sd,
                              const SamplerConfig& sampler) {
  const GaussianPrior prior = GaussianPrior::vague(data.dim(), prior_sd);
  const TailoredPosterior posterior(data, weights, prior);
  return run_mh([&posterior](std::span<const double> beta) { return posterior(beta); }, data.dim(),
                sampler);
}

PosteriorSamples fit_standard(const Dataset& data, double prior_sd, const SamplerConfig& sampler) {
  return fit_tailored(data, WeightVector::ones(data.n()), prior_sd, sampler);
}

Stage1Result run_stage1(const Dataset& train, const PipelineConfig& config) {
  config.validate();
  Stage1Result result;
  if (config.external_pi_u) {
    const auto& pi = *config.external_pi_u;
    if (pi.size() != train.n()) throw DimensionError("external pi_u needs one value per training row");
    for (double p : pi) {
      if (!(p >= 0.0 && p <= 1.0)) throw DataError("external pi_u values must lie in [0, 1]");
    }
    result.external = true;
    result.split.design_fraction = 0.0;
    result.split.seed = config.split_seed;
    result.split.development.resize(train.n());
    std::iota(result.split.development.begin(), result.split.development.end(), 0);
    result.pi_u_development = pi;
    return result;
  }

  result.split = make_split(train.n(), config.design_fraction, 0.0, config.split_seed);
  const Dataset design = train.subset(result.split.design);
  const std::size_t pos = design.positives();
  if (pos == 0 || pos == design.n()) {
    throw DataError("design set holds a single class; stage-1 model cannot be fitted");
  }
  result.samples = fit_standard(design, config.prior_sd, config.sampler);
  const Dataset development = train.subset(result.split.development);
  result.pi_u_development = predictive_means(development, result.samples);
  return result;
}

CvResult cv_select_lambda(const Dataset& development, std::span<const double> pi_u, TargetThreshold t,
                          const CvPlan& plan, const SamplerConfig& sampler,
                          const DistanceFunction& distance, double prior_sd) {
  if (pi_u.size() != development.n()) throw DimensionError("pi_u must align with development rows");
  if (plan.fold_of.size() != development.n()) {
    throw DimensionError("CV plan does not cover the development rows");
  }
  if (plan.lambda_grid.empty()) throw ConfigError("lambda grid is empty");
  sampler.validate();

  const std::size_t n_lambda = plan.lambda_grid.size();
  const std::size_t folds = plan.folds;

  std::vector<Dataset> fold_train;
  std::vector<Dataset> fold_test;
  std::vector<std::vector<double>> fold_pi;
  for (std::size_t k = 0; k < folds; ++k) {
    const auto tr = plan.training_indices(k);
    const auto te = plan.held_out_indices(k);
    if (tr.empty() || te.empty()) throw DataError("a CV fold is empty");
    fold_train.push_back(development.subset(tr));
    fold_test.push_back(development.subset(te));
    std::vector<double> pi;
    for (std::size_t i : tr) pi.push_back(pi_u[i]);
    fold_pi.push_back(std::move(pi));
  }

  CvResult result;
  result.cells.resize(n_lambda * folds);
  const auto n_cells = static_cast<std::ptrdiff_t>(result.cells.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t c = 0; c < n_cells; ++c) {
    const auto cell_index = static_cast<std::size_t>(c);
    const std::size_t li = cell_index / folds;
    const std::size_t k = cell_index % folds;
    CvCell& cell = result.cells[cell_index];
    cell.lambda = plan.lambda_grid[li];
    cell.fold = k;
    try {
      const WeightVector w = compute_weights(fold_pi[k], t, cell.lambda, distance);
      cell.ess = effective_sample_size(w);
      SamplerConfig cfg = sampler;
      cfg.rng_seed = sampler.rng_seed + k + 1;
      const PosteriorSamples samples = fit_tailored(fold_train[k], w, prior_sd, cfg);
      const auto preds = predictive_means(fold_test[k], samples);
      cell.net_benefit = net_benefit(preds, fold_test[k].outcomes(), t).net_benefit;
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  }

  result.mean_net_benefit.assign(n_lambda, std::numeric_limits<double>::quiet_NaN());
  result.successful_folds.assign(n_lambda, 0);
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t li = 0; li < n_lambda; ++li) {
    double sum = 0.0;
    std::size_t ok = 0;
    for (std::size_t k = 0; k < folds; ++k) {
      const CvCell& cell = result.cells[li * folds + k];
      if (cell.ok) {
        sum += cell.net_benefit;
        ++ok;
      }
    }
    result.successful_folds[li] = ok;
    if (ok + 1 < folds) {
      std::ostringstream msg;
      msg << "lambda " << plan.lambda_grid[li] << " dropped: only " << ok << " of " << folds
          << " folds succeeded";
      result.warnings.push_back(msg.str());
      continue;
    }
    if (ok < folds) {
      std::ostringstream msg;
      msg << "lambda " << plan.lambda_grid[li] << " averaged over " << ok << " of " << folds
          << " folds";
      result.warnings.push_back(msg.str());
    }
    result.mean_net_benefit[li] = sum / static_cast<double>(ok);
    // strict comparison over an ascending grid keeps the smallest lambda on ties
    if (result.mean_net_benefit[li] > best) {
      best = result.mean_net_benefit[li];
      result.lambda_star = plan.lambda_grid[li];
      any = true;
    }
  }
  if (!any) {
    std::string detail;
    for (const auto& cell : result.cells) {
      if (!cell.ok) {
        detail = cell.error;
        break;
      }
    }
    throw SamplerError("cross-validation failed for every lambda: " + detail);
  }
  return result;
}

std::vector<EssRow> ess_grid(std::span<const double> pi_u, TargetThreshold t,
                             std::span<const double> lambda_grid, const DistanceFunction& distance,
                             double floor) {
  if (pi_u.empty()) throw DataError("ESS grid needs at least one pi_u value");
  std::vector<EssRow> rows;
  for (double lambda : lambda_grid) {
    const WeightVector w = compute_weights(pi_u, t, lambda, distance);
    EssRow row;
    row.lambda = lambda;
    row.ess = effective_sample_size(w);
    row.ess_fraction = row.ess / static_cast<double>(pi_u.size());
    row.below_floor = row.ess_fraction < floor;
    rows.push_back(row);
  }
  return rows;
}

FittedTailoredModel fit_stage2(const Dataset& train, const Stage1Result& stage1, TargetThreshold t,
                               const PipelineConfig& config) {
  config.validate();
  FittedTailoredModel model;
  model.t = t;
  model.stage1 = stage1;

  const Dataset development = train.subset(stage1.split.development);
  const auto& pi_u = stage1.pi_u_development;
  const auto grid = normalize_lambda_grid(config.lambda_grid);

  model.ess_table = ess_grid(pi_u, t, grid, config.distance, config.ess_floor);
  for (const auto& row : model.ess_table) {
    if (row.below_floor) {
      std::ostringstream msg;
      msg << "ESS_T/n = " << row.ess_fraction << " at lambda " << row.lambda << " is below the "
          << config.ess_floor << " floor";
      model.warnings.push_back(msg.str());
    }
  }

  model.cv_plan = make_cv_plan(development.outcomes(), config.folds, grid, config.cv_seed);
  model.cv = cv_select_lambda(development, pi_u, t, model.cv_plan, config.sampler, config.distance,
                              config.prior_sd);
  model.warnings.insert(model.warnings.end(), model.cv.warnings.begin(), model.cv.warnings.end());
  model.lambda_star = model.cv.lambda_star;

  model.final_weights = compute_weights(pi_u, t, model.lambda_star, config.distance);
  model.ess = effective_sample_size(model.final_weights);
  model.ess_fraction = model.ess / static_cast<double>(development.n());
  model.samples = fit_tailored(development, model.final_weights, config.prior_sd, config.sampler);
  return model;
}

FittedTailoredModel fit_pipeline(const Dataset& train, TargetThreshold t, const PipelineConfig& config) {
  return fit_stage2(train, run_stage1(train, config), t, config);
}

std::uint64_t index_digest(std::span<const std::size_t> indices) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t idx : indices) {
    auto v = static_cast<std::uint64_t>(idx);
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace tailored

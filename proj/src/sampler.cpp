#include "tailored/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tailored/csv.hpp"
#include "tailored/error.hpp"

namespace tailored {

void SamplerConfig::validate() const {
  if (n_iterations == 0) throw ConfigError("n_iterations must be positive");
  if (burn_in >= n_iterations) throw ConfigError("burn_in must be smaller than n_iterations");
  if (thin == 0) throw ConfigError("thin must be at least 1");
  if (!(initial_sd > 0.0) || !std::isfinite(initial_sd)) throw ConfigError("initial_sd must be positive");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) {
    throw ConfigError("target acceptance must lie in (0, 1)");
  }
  if (retained() == 0) throw ConfigError("configuration retains no draws");
}

std::vector<double> PosteriorSamples::mean() const {
  std::vector<double> m(dim(), 0.0);
  for (std::size_t s = 0; s < size(); ++s) {
    for (std::size_t j = 0; j < dim(); ++j) m[j] += draws(s, j);
  }
  for (double& v : m) v /= static_cast<double>(size());
  return m;
}

double adapt_proposal_sd(double current_sd, double batch_acceptance, std::size_t batch_index,
                         double target_acceptance) {
  const double gain = std::pow(static_cast<double>(std::max<std::size_t>(batch_index, 1)), -0.6);
  const double sd = current_sd * std::exp(gain * (batch_acceptance - target_acceptance));
  return std::clamp(sd, kMinProposalSd, kMaxProposalSd);
}

PosteriorSamples run_mh(const LogDensity& log_density, std::size_t dim, const SamplerConfig& config) {
  config.validate();
  if (dim == 0) throw ConfigError("sampler needs at least one parameter");

  std::vector<double> current = config.initial_beta;
  if (current.empty()) current.assign(dim, 0.0);
  if (current.size() != dim) throw DimensionError("initial_beta has the wrong length");

  double current_lp = log_density(current);
  if (!std::isfinite(current_lp)) {
    throw SamplerError("log-posterior is not finite at the initial point");
  }

  std::mt19937_64 rng(config.rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  PosteriorSamples out;
  out.rng_seed = config.rng_seed;
  out.draws = Matrix(config.retained(), dim);
  out.log_posterior_trace.reserve(config.retained());
  out.proposal_sd_trace.reserve(config.retained());

  double sd = config.initial_sd;
  std::vector<double> proposal(dim);
  std::size_t batch_accepted = 0;
  std::size_t batch_index = 0;
  std::size_t post_accepted = 0;
  std::size_t post_proposed = 0;
  std::size_t kept = 0;

  for (std::size_t iter = 0; iter < config.n_iterations; ++iter) {
    for (std::size_t j = 0; j < dim; ++j) proposal[j] = current[j] + sd * normal(rng);
    const double proposal_lp = log_density(proposal);
    const double log_u = std::log(uniform(rng));

    bool accepted = false;
    if (!std::isfinite(proposal_lp)) {
      ++out.nonfinite_rejections;
    } else if (log_u < proposal_lp - current_lp) {
      current.swap(proposal);
      current_lp = proposal_lp;
      accepted = true;
    }

    if (iter < config.burn_in) {
      batch_accepted += accepted ? 1 : 0;
      if ((iter + 1) % kAdaptBatchSize == 0) {
        if (config.adapt_during_burn_in) {
          const double rate = static_cast<double>(batch_accepted) / kAdaptBatchSize;
          sd = adapt_proposal_sd(sd, rate, ++batch_index, config.target_acceptance);
        }
        batch_accepted = 0;
      }
      continue;
    }

    ++post_proposed;
    post_accepted += accepted ? 1 : 0;
    if ((iter - config.burn_in + 1) % config.thin == 0) {
      std::ranges::copy(current, out.draws.row(kept).begin());
      out.log_posterior_trace.push_back(current_lp);
      out.proposal_sd_trace.push_back(sd);
      ++kept;
    }
  }

  out.acceptance_rate = static_cast<double>(post_accepted) / static_cast<double>(post_proposed);
  out.final_proposal_sd = sd;
  return out;
}

Interval hpd_interval(std::span<const double> draws, double mass) {
  if (!(mass > 0.0 && mass < 1.0)) throw ConfigError("HPD mass must lie in (0, 1)");
  if (draws.empty()) throw DataError("HPD interval of an empty sample");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::ranges::sort(sorted);
  const std::size_t s = sorted.size();
  // the small slack keeps e.g. 0.9 * 100 from rounding up to 91
  auto count = static_cast<std::size_t>(std::ceil(mass * static_cast<double>(s) - 1e-9));
  count = std::clamp<std::size_t>(count, 1, s);

  Interval best{sorted[0], sorted[count - 1]};
  for (std::size_t i = 1; i + count <= s; ++i) {
    const double width = sorted[i + count - 1] - sorted[i];
    if (width < best.width()) best = {sorted[i], sorted[i + count - 1]};
  }
  return best;
}

double batch_means_standard_error(std::span<const double> chain) {
  const std::size_t s = chain.size();
  if (s < 4) return 0.0;
  const auto batches = static_cast<std::size_t>(std::sqrt(static_cast<double>(s)));
  const std::size_t len = s / batches;
  std::vector<double> means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t i = 0; i < len; ++i) means[b] += chain[b * len + i];
    means[b] /= static_cast<double>(len);
  }
  double grand = 0.0;
  for (double m : means) grand += m;
  grand /= static_cast<double>(batches);
  double ss = 0.0;
  for (double m : means) ss += (m - grand) * (m - grand);
  const double var_batch = ss / static_cast<double>(batches - 1);
  return std::sqrt(var_batch / static_cast<double>(batches));
}

HpdSummary summarize(const PosteriorSamples& samples, double mass) {
  if (samples.size() < kMinSummaryDraws) {
    throw DataError("at least " + std::to_string(kMinSummaryDraws) + " draws needed to summarize");
  }
  HpdSummary summary;
  summary.mass = mass;
  for (std::size_t j = 0; j < samples.dim(); ++j) {
    auto column = samples.draws.column(j);
    CoefficientSummary c;
    double sum = 0.0;
    for (double v : column) sum += v;
    c.mean = sum / static_cast<double>(column.size());
    c.mc_standard_error = batch_means_standard_error(column);
    c.hpd = hpd_interval(column, mass);
    c.hpd90 = hpd_interval(column, 0.90);
    c.hpd95 = hpd_interval(column, 0.95);
    std::ranges::sort(column);
    const std::size_t s = column.size();
    c.median = s % 2 == 1 ? column[s / 2] : 0.5 * (column[s / 2 - 1] + column[s / 2]);
    summary.coefficients.push_back(c);
  }
  return summary;
}

std::vector<double> gelman_rubin(std::span<const PosteriorSamples> chains) {
  if (chains.size() < 2) throw ConfigError("R-hat needs at least two chains");
  const std::size_t s = chains[0].size();
  const std::size_t dim = chains[0].dim();
  if (s < 2) throw DataError("R-hat needs at least two draws per chain");
  for (const auto& c : chains) {
    if (c.size() != s || c.dim() != dim) throw DimensionError("chains differ in shape");
  }
  const double m = static_cast<double>(chains.size());
  const double len = static_cast<double>(s);
  std::vector<double> rhat(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    std::vector<double> means;
    double within = 0.0;
    for (const auto& c : chains) {
      double mu = 0.0;
      for (std::size_t k = 0; k < s; ++k) mu += c.draws(k, j);
      mu /= len;
      double ss = 0.0;
      for (std::size_t k = 0; k < s; ++k) ss += (c.draws(k, j) - mu) * (c.draws(k, j) - mu);
      within += ss / (len - 1.0);
      means.push_back(mu);
    }
    within /= m;
    double grand = 0.0;
    for (double mu : means) grand += mu;
    grand /= m;
    double between = 0.0;
    for (double mu : means) between += (mu - grand) * (mu - grand);
    between *= len / (m - 1.0);
    const double pooled = (len - 1.0) / len * within + between / len;
    rhat[j] = within > 0.0 ? std::sqrt(pooled / within) : 1.0;
  }
  return rhat;
}

void write_draws_csv(const std::string& path, const PosteriorSamples& samples,
                     const std::vector<std::string>& names) {
  if (names.size() != samples.dim()) throw DimensionError("one column name per coefficient required");
  CsvTable table;
  table.header = names;
  table.rows.reserve(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    std::vector<std::string> row;
    for (double v : samples.draws.row(s)) row.push_back(format_double(v));
    table.rows.push_back(std::move(row));
  }
  write_csv(path, table);
}

PosteriorSamples read_draws_csv(const std::string& path, std::vector<std::string>* names) {
  const CsvTable table = read_csv(path);
  if (table.rows.empty()) throw DataError("draws file '" + path + "' holds no draws");
  PosteriorSamples samples;
  samples.draws = Matrix(table.rows.size(), table.header.size());
  for (std::size_t s = 0; s < table.rows.size(); ++s) {
    for (std::size_t j = 0; j < table.header.size(); ++j) {
      samples.draws(s, j) = parse_double(table.rows[s][j], table.header[j]);
    }
  }
  if (names) *names = table.header;
  return samples;
}

}  // namespace tailored

#pragma once

// Replications of the synthetic benchmark studies: each replication draws a
// training set and an independent clean test set, fits standard Bayes on the
// full training set and the tailored pipeline per threshold, and scores both
// against the oracle classifier by Net Benefit.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tailored/csv.hpp"
#include "tailored/evaluation.hpp"
#include "tailored/simulation.hpp"
#include "tailored/tuning.hpp"

namespace tailored {

enum class Figure { sim1_fig2, sim2_fig4, sim3_fig6 };

/// Accepts "sim1-fig2", "sim2-fig4", "sim3-fig6"; throws ConfigError otherwise.
Figure parse_figure(const std::string& id);
std::string to_string(Figure figure);
/// Name of the scenario axis: "q", "prevalence" or "psi".
std::string scenario_name(Figure figure);

/// Draws one dataset for a figure. `scenario` is q, the class prior or psi.
SimulatedData simulate_scenario(Figure figure, std::size_t n, double scenario, std::uint64_t seed,
                                bool clean);

Oracle scenario_oracle(Figure figure, double scenario);

struct ReplicationOutcome {
  std::vector<double> thresholds;
  std::vector<NetBenefitReport> tailored;
  std::vector<NetBenefitReport> standard;
  std::vector<NetBenefitReport> optimal;
  std::vector<double> lambda_star;
  std::vector<std::vector<double>> tailored_posterior_mean;
  std::vector<double> standard_posterior_mean;
};

ReplicationOutcome run_replication(Figure figure, std::size_t n, double scenario,
                                   std::span<const double> thresholds, std::size_t test_size,
                                   std::uint64_t seed, const PipelineConfig& pipeline);

struct ReproduceConfig {
  Figure figure = Figure::sim1_fig2;
  double scale = 1.0;
  std::size_t base_repetitions = 20;
  std::vector<std::size_t> sample_sizes;
  std::vector<double> scenario_values;
  std::vector<double> thresholds;
  std::size_t test_size = 2000;
  std::uint64_t seed = 1;
  PipelineConfig pipeline;

  /// max(1, round(base_repetitions * scale)).
  std::size_t repetitions() const;
  /// Fills empty grids with the figure's published grid.
  void apply_defaults();
  void validate() const;
};

struct NbRow {
  std::size_t n_train = 0;
  double scenario = 0.0;
  double threshold = 0.0;
  std::string model;
  std::size_t split = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t n = 0;
  double nb = 0.0;
  double lambda_star = 0.0;
};

struct DeltaRow {
  std::size_t n_train = 0;
  double scenario = 0.0;
  double threshold = 0.0;
  double mean_delta = 0.0;
  double se_delta = 0.0;
  double mean_tailored = 0.0;
  double mean_standard = 0.0;
  double mean_optimal = 0.0;
};

struct ReproduceResult {
  std::vector<NbRow> nb_rows;
  std::vector<DeltaRow> delta_rows;
};

using ProgressFn = std::function<void(const std::string&)>;

ReproduceResult reproduce(ReproduceConfig config, const ProgressFn& progress = {});

CsvTable nb_table(std::span<const NbRow> rows, const std::string& scenario_column);
CsvTable delta_table(std::span<const DeltaRow> rows, const std::string& scenario_column);

/// Deterministic 64-bit seed mixing (splitmix64 finalizer over the inputs).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts);

}  // namespace tailored

#include "tailored/experiments.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "tailored/error.hpp"
#include "tailored/predict.hpp"

namespace tailored {

Figure parse_figure(const std::string& id) {
  if (id == "sim1-fig2") return Figure::sim1_fig2;
  if (id == "sim2-fig4") return Figure::sim2_fig4;
  if (id == "sim3-fig6") return Figure::sim3_fig6;
  throw ConfigError("unknown figure id '" + id + "' (expected sim1-fig2, sim2-fig4 or sim3-fig6)");
}

std::string to_string(Figure figure) {
  switch (figure) {
    case Figure::sim1_fig2:
      return "sim1-fig2";
    case Figure::sim2_fig4:
      return "sim2-fig4";
    case Figure::sim3_fig6:
      return "sim3-fig6";
  }
  return "unknown";
}

std::string scenario_name(Figure figure) {
  switch (figure) {
    case Figure::sim1_fig2:
      return "q";
    case Figure::sim2_fig4:
      return "prevalence";
    case Figure::sim3_fig6:
      return "psi";
  }
  return "scenario";
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(base);
  for (std::uint64_t p : parts) h = mix(h ^ mix(p));
  return h;
}

SimulatedData simulate_scenario(Figure figure, std::size_t n, double scenario, std::uint64_t seed,
                                bool clean) {
  switch (figure) {
    case Figure::sim1_fig2:
      return generate_sim1({n, scenario, seed});
    case Figure::sim2_fig4:
      return generate_sim2({n, seed, scenario});
    case Figure::sim3_fig6: {
      Sim3Config cfg;
      cfg.n = n;
      cfg.psi = scenario;
      cfg.seed = seed;
      cfg.clean = clean;
      return generate_sim3(cfg);
    }
  }
  throw ConfigError("unknown figure");
}

Oracle scenario_oracle(Figure figure, double scenario) {
  switch (figure) {
    case Figure::sim1_fig2:
      return sim1_oracle(scenario);
    case Figure::sim2_fig4:
      return sim2_oracle(scenario);
    case Figure::sim3_fig6:
      return sim3_oracle({0.0, 2.0, 3.0});
  }
  throw ConfigError("unknown figure");
}

ReplicationOutcome run_replication(Figure figure, std::size_t n, double scenario,
                                   std::span<const double> thresholds, std::size_t test_size,
                                   std::uint64_t seed, const PipelineConfig& pipeline) {
  const SimulatedData train = simulate_scenario(figure, n, scenario, derive_seed(seed, {1}), false);
  const SimulatedData test = simulate_scenario(figure, test_size, scenario, derive_seed(seed, {2}), true);

  PipelineConfig cfg = pipeline;
  cfg.split_seed = derive_seed(seed, {3});
  cfg.cv_seed = derive_seed(seed, {4});
  cfg.sampler.rng_seed = derive_seed(seed, {5});

  ReplicationOutcome out;
  out.thresholds.assign(thresholds.begin(), thresholds.end());

  const PosteriorSamples standard = fit_standard(train.data, cfg.prior_sd, cfg.sampler);
  out.standard_posterior_mean = standard.mean();
  const auto standard_preds = predictive_means(test.data, standard);

  const Stage1Result stage1 = run_stage1(train.data, cfg);
  for (double tv : thresholds) {
    const TargetThreshold t(tv);
    const FittedTailoredModel fitted = fit_stage2(train.data, stage1, t, cfg);
    const auto tailored_preds = predictive_means(test.data, fitted.samples);
    out.tailored.push_back(net_benefit(tailored_preds, test.data.outcomes(), t));
    out.standard.push_back(net_benefit(standard_preds, test.data.outcomes(), t));
    out.optimal.push_back(optimal_nb(test.true_probability, test.data.outcomes(), t));
    out.lambda_star.push_back(fitted.lambda_star);
    out.tailored_posterior_mean.push_back(fitted.samples.mean());
  }
  return out;
}

std::size_t ReproduceConfig::repetitions() const {
  const auto reps = static_cast<std::size_t>(std::llround(static_cast<double>(base_repetitions) * scale));
  return std::max<std::size_t>(reps, 1);
}

void ReproduceConfig::apply_defaults() {
  if (sample_sizes.empty()) {
    sample_sizes = figure == Figure::sim3_fig6 ? std::vector<std::size_t>{1000}
                                               : std::vector<std::size_t>{500, 1000, 5000, 10000};
  }
  if (scenario_values.empty()) {
    switch (figure) {
      case Figure::sim1_fig2:
        scenario_values = {0.1, 0.5, 1.0};
        break;
      case Figure::sim2_fig4:
        scenario_values = {0.1, 0.3, 0.5};
        break;
      case Figure::sim3_fig6:
        scenario_values = {0.0, 0.05, 0.10, 0.15, 0.20, 0.30};
        break;
    }
  }
  if (thresholds.empty()) {
    thresholds = figure == Figure::sim3_fig6
                     ? std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}
                     : std::vector<double>{0.1, 0.3, 0.5, 0.7, 0.9};
  }
}

void ReproduceConfig::validate() const {
  if (!(scale > 0.0 && scale <= 1.0)) throw ConfigError("scale must lie in (0, 1]");
  if (test_size == 0) throw ConfigError("test size must be positive");
  for (double t : thresholds) (void)TargetThreshold(t);
  pipeline.validate();
}

ReproduceResult reproduce(ReproduceConfig config, const ProgressFn& progress) {
  config.apply_defaults();
  config.validate();
  const std::size_t reps = config.repetitions();
  ReproduceResult result;

  for (std::size_t ni = 0; ni < config.sample_sizes.size(); ++ni) {
    const std::size_t n = config.sample_sizes[ni];
    for (std::size_t si = 0; si < config.scenario_values.size(); ++si) {
      const double scenario = config.scenario_values[si];
      const std::size_t n_t = config.thresholds.size();
      std::vector<std::vector<double>> tb(n_t), sb(n_t), opt(n_t);

      for (std::size_t rep = 0; rep < reps; ++rep) {
        if (progress) {
          std::ostringstream msg;
          msg << to_string(config.figure) << " n=" << n << " " << scenario_name(config.figure) << "="
              << scenario << " rep " << rep + 1 << "/" << reps;
          progress(msg.str());
        }
        const std::uint64_t seed = derive_seed(config.seed, {static_cast<std::uint64_t>(config.figure),
                                                             n, si, rep});
        const ReplicationOutcome outcome = run_replication(config.figure, n, scenario, config.thresholds,
                                                           config.test_size, seed, config.pipeline);
        for (std::size_t ti = 0; ti < n_t; ++ti) {
          const auto add = [&](const std::string& model, const NetBenefitReport& r, double lambda) {
            result.nb_rows.push_back({n, scenario, config.thresholds[ti], model, rep, r.tp_count,
                                      r.fp_count, r.n, r.net_benefit, lambda});
          };
          const double nan = std::numeric_limits<double>::quiet_NaN();
          add("TB", outcome.tailored[ti], outcome.lambda_star[ti]);
          add("SB", outcome.standard[ti], nan);
          add("optimal", outcome.optimal[ti], nan);
          tb[ti].push_back(outcome.tailored[ti].net_benefit);
          sb[ti].push_back(outcome.standard[ti].net_benefit);
          opt[ti].push_back(outcome.optimal[ti].net_benefit);
        }
      }

      for (std::size_t ti = 0; ti < n_t; ++ti) {
        DeltaRow row;
        row.n_train = n;
        row.scenario = scenario;
        row.threshold = config.thresholds[ti];
        const auto mean = [](const std::vector<double>& v) {
          double s = 0.0;
          for (double x : v) s += x;
          return s / static_cast<double>(v.size());
        };
        row.mean_tailored = mean(tb[ti]);
        row.mean_standard = mean(sb[ti]);
        row.mean_optimal = mean(opt[ti]);
        if (reps >= 2) {
          const PairedDelta delta = paired_delta(tb[ti], sb[ti]);
          row.mean_delta = delta.mean_delta;
          row.se_delta = delta.se_delta;
        } else {
          row.mean_delta = tb[ti][0] - sb[ti][0];
          row.se_delta = std::numeric_limits<double>::quiet_NaN();
        }
        result.delta_rows.push_back(row);
      }
    }
  }
  return result;
}

CsvTable nb_table(std::span<const NbRow> rows, const std::string& scenario_column) {
  CsvTable table;
  table.header = {"n_train", scenario_column, "threshold", "model", "split", "tp", "fp", "n", "nb",
                  "lambda_star"};
  for (const auto& r : rows) {
    table.rows.push_back({std::to_string(r.n_train), format_double(r.scenario), format_double(r.threshold),
                          r.model, std::to_string(r.split), std::to_string(r.tp), std::to_string(r.fp),
                          std::to_string(r.n), format_double(r.nb), format_double(r.lambda_star)});
  }
  return table;
}

CsvTable delta_table(std::span<const DeltaRow> rows, const std::string& scenario_column) {
  CsvTable table;
  table.header = {"n_train", scenario_column, "threshold", "mean_delta", "se_delta",
                  "mean_nb_tb", "mean_nb_sb", "mean_nb_optimal"};
  for (const auto& r : rows) {
    table.rows.push_back({std::to_string(r.n_train), format_double(r.scenario), format_double(r.threshold),
                          format_double(r.mean_delta), format_double(r.se_delta),
                          format_double(r.mean_tailored), format_double(r.mean_standard),
                          format_double(r.mean_optimal)});
  }
  return table;
}

}  // namespace tailored

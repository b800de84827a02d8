#include "commands.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>
#include <json.hpp>

#include "tailored/csv.hpp"
#include "tailored/error.hpp"
#include "tailored/evaluation.hpp"
#include "tailored/experiments.hpp"
#include "tailored/model.hpp"
#include "tailored/predict.hpp"
#include "tailored/sampler.hpp"
#include "tailored/simulation.hpp"
#include "tailored/tuning.hpp"

namespace tailored::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kManifestVersion = 1;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  for (double v : parse_number_list(text)) {
    if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("'" + text + "' must list positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string file_digest(const std::string& path) { return hex64(fnv1a(read_text_file(path))); }

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

/// Writes every file only after all of them were rendered in memory.
void write_outputs(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& files) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  for (const auto& [name, text] : files) write_text_file((dir / name).string(), text);
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

// ---------------------------------------------------------------------------
// shared option groups

struct ThresholdArgs {
  double t = kNaN;
  std::string utilities;
  CLI::Option* t_opt = nullptr;
  CLI::Option* u_opt = nullptr;

  void add(CLI::App* app) {
    t_opt = app->add_option("--t", t, "target threshold in (0, 1)");
    u_opt = app->add_option("--utilities", utilities, "utility quadruple u_tp,u_fp,u_fn,u_tn");
    t_opt->excludes(u_opt);
  }

  TargetThreshold resolve() const {
    const bool has_t = t_opt->count() > 0;
    const bool has_u = u_opt->count() > 0;
    if (has_t == has_u) throw ConfigError("exactly one of --t or --utilities is required");
    if (has_t) return TargetThreshold(t);
    return target_threshold(utility_spec());
  }

  UtilitySpec utility_spec() const {
    const auto v = parse_number_list(utilities);
    if (v.size() != 4) throw ConfigError("--utilities needs four values u_tp,u_fp,u_fn,u_tn");
    return {v[0], v[1], v[2], v[3]};
  }

  Json manifest(TargetThreshold resolved) const {
    Json j;
    j["t"] = resolved.value();
    if (u_opt->count() > 0) {
      const auto u = utility_spec();
      j["source"] = "utilities";
      j["utilities"] = {{"u_tp", u.u_tp}, {"u_fp", u.u_fp}, {"u_fn", u.u_fn}, {"u_tn", u.u_tn}};
    } else {
      j["source"] = "t";
    }
    return j;
  }
};

struct SamplerArgs {
  std::size_t iterations = SamplerConfig{}.n_iterations;
  std::size_t burn_in = SamplerConfig{}.burn_in;
  std::size_t thin = SamplerConfig{}.thin;
  double proposal_sd = SamplerConfig{}.initial_sd;
  double target_acceptance = SamplerConfig{}.target_acceptance;
  bool no_adapt = false;

  void add(CLI::App* app) {
    app->add_option("--iterations", iterations, "MH iterations including burn-in")->capture_default_str();
    app->add_option("--burn-in", burn_in, "burn-in iterations")->capture_default_str();
    app->add_option("--thin", thin, "keep every k-th post-burn-in draw")->capture_default_str();
    app->add_option("--proposal-sd", proposal_sd, "initial random-walk sd")->capture_default_str();
    app->add_option("--target-acceptance", target_acceptance, "adaptation target")->capture_default_str();
    app->add_flag("--no-adapt", no_adapt, "freeze the proposal sd during burn-in");
  }

  SamplerConfig config(std::uint64_t seed) const {
    SamplerConfig c;
    c.n_iterations = iterations;
    c.burn_in = burn_in;
    c.thin = thin;
    c.initial_sd = proposal_sd;
    c.target_acceptance = target_acceptance;
    c.adapt_during_burn_in = !no_adapt;
    c.rng_seed = seed;
    c.validate();
    return c;
  }
};

Json sampler_json(const SamplerConfig& c) {
  return {{"iterations", c.n_iterations},
          {"burn_in", c.burn_in},
          {"thin", c.thin},
          {"initial_proposal_sd", c.initial_sd},
          {"target_acceptance", c.target_acceptance},
          {"adapt_during_burn_in", c.adapt_during_burn_in},
          {"seed", c.rng_seed}};
}

struct TuningArgs {
  std::string lambda_grid = "0,1,2,5,10,25,50,100";
  std::size_t folds = 5;
  double design_fraction = 0.2;
  std::string distance = "squared";
  double prior_sd = 100.0;

  void add(CLI::App* app) {
    app->add_option("--lambda-grid", lambda_grid, "comma list or a:b:step")->capture_default_str();
    app->add_option("--folds", folds, "cross-validation folds")->capture_default_str();
    app->add_option("--design-fraction", design_fraction, "share of training rows for stage 1")
        ->capture_default_str();
    app->add_option("--distance", distance, "squared or eps:<value>")->capture_default_str();
    app->add_option("--prior-sd", prior_sd, "sd of the Gaussian prior on every coefficient")
        ->capture_default_str();
  }

  void apply(PipelineConfig& p) const {
    p.lambda_grid = normalize_lambda_grid(parse_number_list(lambda_grid));
    p.folds = folds;
    p.design_fraction = design_fraction;
    p.distance = DistanceFunction::parse(distance);
    p.prior_sd = prior_sd;
  }
};

std::string joined(const std::vector<std::string>& items) {
  std::string s;
  for (const auto& it : items) s += (s.empty() ? "" : ",") + it;
  return s;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string data;
  std::string out;
  std::string outcome = "y";
  std::string drop;
  std::string pi_u;
  bool standardize = false;
  double ess_floor = kDefaultEssFloor;
  std::uint64_t seed = 1;
  std::uint64_t split_seed = 0;
  std::uint64_t cv_seed = 0;
  std::uint64_t sampler_seed = 0;
  CLI::Option* split_seed_opt = nullptr;
  CLI::Option* cv_seed_opt = nullptr;
  CLI::Option* sampler_seed_opt = nullptr;
  std::size_t chains = 1;
  ThresholdArgs threshold;
  TuningArgs tuning;
  SamplerArgs sampler;
};

std::vector<double> read_pi_u(const std::string& path) {
  const CsvTable table = read_csv(path);
  const auto values = table.numeric_column("pi_u");
  for (double p : values) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("pi_u values in '" + path + "' must lie in [0, 1]");
  }
  return values;
}

Json coefficient_summary_json(const PosteriorSamples& samples, const std::vector<std::string>& names) {
  Json coefs = Json::array();
  const HpdSummary summary = summarize(samples, 0.9);
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto& c = summary.coefficients[j];
    coefs.push_back({{"name", names[j]},
                     {"mean", c.mean},
                     {"median", c.median},
                     {"hpd90", {c.hpd90.lower, c.hpd90.upper}},
                     {"hpd95", {c.hpd95.lower, c.hpd95.upper}},
                     {"mc_standard_error", c.mc_standard_error}});
  }
  return coefs;
}

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  // everything is validated and computed before the output directory is touched
  const TargetThreshold t = a.threshold.resolve();
  const auto dropped = split_list(a.drop);

  PipelineConfig pipeline;
  a.tuning.apply(pipeline);
  pipeline.ess_floor = a.ess_floor;
  pipeline.split_seed = a.split_seed_opt->count() ? a.split_seed : derive_seed(a.seed, {1});
  pipeline.cv_seed = a.cv_seed_opt->count() ? a.cv_seed : derive_seed(a.seed, {2});
  pipeline.sampler = a.sampler.config(a.sampler_seed_opt->count() ? a.sampler_seed : derive_seed(a.seed, {3}));
  if (a.chains == 0) throw ConfigError("--chains must be at least 1");

  LoadedDataset loaded = load_dataset(a.data, a.outcome, dropped);
  if (!a.pi_u.empty()) pipeline.external_pi_u = read_pi_u(a.pi_u);
  pipeline.validate();

  Json standardization = nullptr;
  Dataset train = loaded.data;
  if (a.standardize) {
    const Standardization z = Standardization::fit(train);
    train = z.apply(train);
    standardization = {{"means", z.means}, {"sds", z.sds}};
  }

  const FittedTailoredModel model = fit_pipeline(train, t, pipeline);
  const auto names = train.coefficient_names();
  std::vector<std::string> warnings = model.warnings;

  Json rhat = nullptr;
  if (a.chains > 1) {
    const Dataset development = train.subset(model.stage1.split.development);
    std::vector<PosteriorSamples> chains{model.samples};
    for (std::size_t c = 1; c < a.chains; ++c) {
      SamplerConfig sc = pipeline.sampler;
      sc.rng_seed = derive_seed(pipeline.sampler.rng_seed, {c});
      chains.push_back(fit_tailored(development, model.final_weights, pipeline.prior_sd, sc));
    }
    rhat = Json::object();
    const auto r = gelman_rubin(chains);
    for (std::size_t j = 0; j < names.size(); ++j) rhat[names[j]] = r[j];
  }

  Json summary = nullptr;
  if (model.samples.size() >= kMinSummaryDraws) {
    summary = coefficient_summary_json(model.samples, names);
  } else {
    warnings.push_back("fewer than " + std::to_string(kMinSummaryDraws) +
                       " retained draws; coefficient summary omitted");
  }

  // weights.csv: one row per development row
  CsvTable weights;
  weights.header = {"row_id", "pi_u", "weight"};
  const auto& dev = model.stage1.split.development;
  for (std::size_t i = 0; i < dev.size(); ++i) {
    weights.rows.push_back({loaded.row_ids[dev[i]], format_double(model.stage1.pi_u_development[i]),
                            format_double(model.final_weights[i])});
  }

  CsvTable ess;
  ess.header = {"lambda", "ess", "ess_fraction", "below_floor"};
  for (const auto& r : model.ess_table) {
    ess.rows.push_back({format_double(r.lambda), format_double(r.ess), format_double(r.ess_fraction),
                        r.below_floor ? "true" : "false"});
  }

  CsvTable cv;
  cv.header = {"lambda", "fold", "ok", "net_benefit", "ess", "error"};
  for (const auto& c : model.cv.cells) {
    cv.rows.push_back({format_double(c.lambda), std::to_string(c.fold + 1), c.ok ? "true" : "false",
                       c.ok ? format_double(c.net_benefit) : "NA", format_double(c.ess), c.error});
  }

  Json cv_summary = Json::array();
  for (std::size_t g = 0; g < model.cv_plan.lambda_grid.size(); ++g) {
    cv_summary.push_back({{"lambda", model.cv_plan.lambda_grid[g]},
                          {"mean_net_benefit", number_or_null(model.cv.mean_net_benefit[g])},
                          {"successful_folds", model.cv.successful_folds[g]}});
  }

  Json m;
  m["format_version"] = kManifestVersion;
  m["command"] = "fit";
  m["input"] = {{"path", a.data},
                {"fnv1a64", file_digest(a.data)},
                {"rows", train.n()},
                {"positives", train.positives()},
                {"outcome_column", a.outcome},
                {"dropped_columns", dropped},
                {"covariates", train.covariate_names()}};
  m["threshold"] = a.threshold.manifest(t);
  m["standardization"] = standardization;
  m["seeds"] = {{"base", a.seed},
                {"split", pipeline.split_seed},
                {"cv", pipeline.cv_seed},
                {"sampler", pipeline.sampler.rng_seed}};
  m["pipeline"] = {{"design_fraction", pipeline.design_fraction},
                   {"folds", pipeline.folds},
                   {"lambda_grid", pipeline.lambda_grid},
                   {"distance", pipeline.distance.to_string()},
                   {"prior_sd", pipeline.prior_sd},
                   {"ess_floor", pipeline.ess_floor}};
  m["external_pi_u"] = a.pi_u.empty() ? Json(nullptr) : Json{{"path", a.pi_u}, {"fnv1a64", file_digest(a.pi_u)}};
  m["sampler"] = sampler_json(pipeline.sampler);
  m["split"] = {{"design_rows", model.stage1.split.design.size()},
                {"development_rows", dev.size()},
                {"design_digest", hex64(index_digest(model.stage1.split.design))},
                {"development_digest", hex64(index_digest(dev))}};
  m["cv"] = cv_summary;
  m["lambda_star"] = model.lambda_star;
  m["ess"] = model.ess;
  m["ess_fraction"] = model.ess_fraction;
  m["posterior"] = {{"draws_file", "draws.csv"},
                    {"coefficients", names},
                    {"retained_draws", model.samples.size()},
                    {"acceptance_rate", model.samples.acceptance_rate},
                    {"final_proposal_sd", model.samples.final_proposal_sd},
                    {"nonfinite_rejections", model.samples.nonfinite_rejections},
                    {"summary", summary}};
  m["diagnostics"] = {{"chains", a.chains}, {"rhat", rhat}};
  m["files"] = {"manifest.json", "draws.csv", "weights.csv", "ess.csv", "cv.csv"};
  m["warnings"] = warnings;

  std::ostringstream draws;
  {
    CsvTable table;
    table.header = names;
    for (std::size_t s = 0; s < model.samples.size(); ++s) {
      std::vector<std::string> row;
      for (double v : model.samples.draws.row(s)) row.push_back(format_double(v));
      table.rows.push_back(std::move(row));
    }
    draws << format_csv(table);
  }

  write_outputs(a.out, {{"manifest.json", dump(m)},
                        {"draws.csv", draws.str()},
                        {"weights.csv", format_csv(weights)},
                        {"ess.csv", format_csv(ess)},
                        {"cv.csv", format_csv(cv)}});

  for (const auto& w : warnings) err << "warning: " << w << "\n";
  out << "t=" << format_double(t.value()) << " lambda*=" << format_double(model.lambda_star)
      << " ess=" << format_double(model.ess) << " acceptance=" << format_double(model.samples.acceptance_rate)
      << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// predict

struct ModelArtifact {
  Json manifest;
  PosteriorSamples samples;
  TargetThreshold t{0.5};
  std::string outcome_column;
  std::vector<std::string> dropped;
  std::vector<std::string> covariates;
  std::optional<Standardization> standardization;
};

ModelArtifact load_artifact(const std::string& dir) {
  ModelArtifact art;
  const fs::path base(dir);
  try {
    art.manifest = Json::parse(read_text_file((base / "manifest.json").string()));
    art.t = TargetThreshold(art.manifest.at("threshold").at("t").get<double>());
    const auto& input = art.manifest.at("input");
    art.outcome_column = input.at("outcome_column").get<std::string>();
    art.dropped = input.at("dropped_columns").get<std::vector<std::string>>();
    art.covariates = input.at("covariates").get<std::vector<std::string>>();
    const auto& z = art.manifest.at("standardization");
    if (!z.is_null()) {
      art.standardization = Standardization{z.at("means").get<std::vector<double>>(),
                                            z.at("sds").get<std::vector<double>>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed model manifest in '" + dir + "': " + e.what());
  }
  std::vector<std::string> names;
  art.samples = read_draws_csv((base / "draws.csv").string(), &names);
  std::vector<std::string> expected{"(Intercept)"};
  expected.insert(expected.end(), art.covariates.begin(), art.covariates.end());
  if (names != expected) throw DataError("draws.csv columns do not match the manifest coefficients");
  return art;
}

struct Predictions {
  std::vector<std::string> row_ids;
  std::vector<PredictiveResult> results;
  std::vector<int> outcomes;
  bool had_outcome = false;
};

Predictions predict_rows(const ModelArtifact& art, const std::string& data_path) {
  Predictions p;
  LoadedDataset loaded = load_covariates(data_path, art.outcome_column, art.dropped, &p.had_outcome);
  if (loaded.data.covariate_names() != art.covariates) {
    throw DataError("schema mismatch: '" + data_path + "' has covariates [" +
                    joined(loaded.data.covariate_names()) + "] but the model expects [" + joined(art.covariates) +
                    "] in that order");
  }
  const Dataset data = art.standardization ? art.standardization->apply(loaded.data) : loaded.data;
  p.row_ids = loaded.row_ids;
  p.outcomes = data.outcomes();
  p.results.reserve(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) p.results.push_back(posterior_predictive(data.row(i), art.samples));
  return p;
}

struct PredictArgs {
  std::string model;
  std::string data;
  std::string out;
  std::string histogram;
  std::size_t bins = 20;
};

int cmd_predict(const PredictArgs& a, std::ostream& out, std::ostream&) {
  const ModelArtifact art = load_artifact(a.model);
  const Predictions p = predict_rows(art, a.data);

  CsvTable table;
  table.header = {"row_id", "mean_probability", "predictive_sd", "classification"};
  if (p.had_outcome) table.header.push_back(art.outcome_column);
  for (std::size_t i = 0; i < p.results.size(); ++i) {
    const auto& r = p.results[i];
    std::vector<std::string> row{p.row_ids[i], format_double(r.mean_probability), format_double(r.predictive_sd),
                                 to_string(classify(r.mean_probability, art.t))};
    if (p.had_outcome) row.push_back(std::to_string(p.outcomes[i]));
    table.rows.push_back(std::move(row));
  }

  std::string histogram;
  if (!a.histogram.empty()) {
    if (a.bins == 0) throw ConfigError("--bins must be positive");
    CsvTable h;
    h.header = {"row_id", "bin_lower", "bin_upper", "count"};
    for (std::size_t i = 0; i < p.results.size(); ++i) {
      const auto counts = predictive_histogram(p.results[i], a.bins);
      for (std::size_t b = 0; b < a.bins; ++b) {
        const double lo = static_cast<double>(b) / static_cast<double>(a.bins);
        const double hi = static_cast<double>(b + 1) / static_cast<double>(a.bins);
        h.rows.push_back({p.row_ids[i], format_double(lo), format_double(hi), std::to_string(counts[b])});
      }
    }
    histogram = format_csv(h);
  }

  emit(a.out, format_csv(table), out);
  if (!a.histogram.empty()) write_text_file(a.histogram, histogram);
  return kOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::vector<std::string> predictions;
  std::vector<std::string> models;
  std::string names;
  std::string data;
  std::string outcome = "y";
  std::string thresholds = "0.1:0.9:0.05";
  std::string out;
  std::size_t calibration_bins = 0;
  bool reference = false;
};

struct ScoredModel {
  std::string name;
  std::vector<double> probability;
  std::vector<int> outcome;
  std::vector<std::string> split;
};

std::vector<int> outcome_values(const CsvTable& table, std::string_view column, const std::string& path) {
  const std::size_t c = table.require_column(column);
  std::vector<int> y;
  y.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    if (row[c] == "0") {
      y.push_back(0);
    } else if (row[c] == "1") {
      y.push_back(1);
    } else {
      throw DataError("outcome values in '" + path + "' must be 0 or 1, got '" + row[c] + "'");
    }
  }
  return y;
}

std::vector<ScoredModel> load_scored_models(const EvaluateArgs& a) {
  std::vector<ScoredModel> models;
  std::optional<CsvTable> data_table;
  if (!a.data.empty()) data_table = read_csv(a.data);

  auto outcomes_from_data = [&](std::size_t rows, const std::string& source) {
    if (!data_table) throw DataError("'" + source + "' has no outcome column and no --data was given");
    auto y = outcome_values(*data_table, a.outcome, a.data);
    if (y.size() != rows) throw DimensionError("'" + source + "' and --data differ in row count");
    return y;
  };

  for (const auto& path : a.predictions) {
    const CsvTable table = read_csv(path);
    ScoredModel m;
    m.name = fs::path(path).stem().string();
    if (table.column_index("mean_probability")) {
      m.probability = table.numeric_column("mean_probability");
    } else {
      m.probability = table.numeric_column("probability");
    }
    m.outcome = table.column_index(a.outcome) ? outcome_values(table, a.outcome, path)
                                              : outcomes_from_data(table.rows.size(), path);
    if (const auto c = table.column_index("split")) {
      for (const auto& row : table.rows) m.split.push_back(row[*c]);
    } else {
      m.split.assign(table.rows.size(), "1");
    }
    models.push_back(std::move(m));
  }
  for (const auto& dir : a.models) {
    if (a.data.empty()) throw ConfigError("--model needs --data");
    const ModelArtifact art = load_artifact(dir);
    const Predictions p = predict_rows(art, a.data);
    if (!p.had_outcome) throw DataError("'" + a.data + "' has no outcome column '" + art.outcome_column + "'");
    ScoredModel m;
    m.name = fs::path(dir).filename().string();
    if (m.name.empty()) m.name = fs::path(dir).parent_path().filename().string();
    for (const auto& r : p.results) m.probability.push_back(r.mean_probability);
    m.outcome = p.outcomes;
    m.split.assign(m.outcome.size(), "1");
    if (const auto c = data_table->column_index("split")) {
      for (std::size_t i = 0; i < m.split.size(); ++i) m.split[i] = data_table->rows[i][*c];
    }
    models.push_back(std::move(m));
  }
  if (models.empty()) throw ConfigError("evaluate needs at least one --predictions file or --model");

  const auto names = split_list(a.names);
  if (!names.empty()) {
    if (names.size() != models.size()) throw ConfigError("--names needs one name per model");
    for (std::size_t i = 0; i < names.size(); ++i) models[i].name = names[i];
  }
  std::set<std::string> unique;
  for (auto& m : models) {
    if (!unique.insert(m.name).second) throw ConfigError("duplicate model name '" + m.name + "'; use --names");
    for (double p : m.probability) {
      if (!(p >= 0.0 && p <= 1.0)) throw DataError("probabilities of '" + m.name + "' must lie in [0, 1]");
    }
  }
  return models;
}

/// Split labels in order of first appearance.
std::vector<std::string> split_order(const std::vector<std::string>& labels) {
  std::vector<std::string> order;
  std::set<std::string> seen;
  for (const auto& s : labels) {
    if (seen.insert(s).second) order.push_back(s);
  }
  return order;
}

NetBenefitReport split_report(const ScoredModel& m, const std::string& split, TargetThreshold t) {
  std::vector<double> p;
  std::vector<int> y;
  for (std::size_t i = 0; i < m.probability.size(); ++i) {
    if (m.split[i] != split) continue;
    p.push_back(m.probability[i]);
    y.push_back(m.outcome[i]);
  }
  return net_benefit(p, y, t);
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  const std::vector<double> thresholds = parse_number_list(a.thresholds);
  if (thresholds.empty()) throw ConfigError("--thresholds is empty");
  for (double t : thresholds) (void)TargetThreshold(t);
  std::vector<ScoredModel> models = load_scored_models(a);

  if (a.reference) {
    // treat-all and treat-none share the first model's outcomes and splits
    ScoredModel all{"treat_all", std::vector<double>(models[0].outcome.size(), 1.0), models[0].outcome,
                    models[0].split};
    ScoredModel none{"treat_none", std::vector<double>(models[0].outcome.size(), 0.0), models[0].outcome,
                     models[0].split};
    models.push_back(std::move(all));
    models.push_back(std::move(none));
  }

  const auto splits = split_order(models[0].split);
  CsvTable nb;
  nb.header = {"threshold", "model", "split", "tp", "fp", "n", "nb"};
  // nb_by[model][threshold][split]
  std::vector<std::vector<std::vector<double>>> nb_by(models.size());
  for (std::size_t k = 0; k < models.size(); ++k) {
    nb_by[k].resize(thresholds.size());
    const auto own = split_order(models[k].split);
    for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
      const TargetThreshold t(thresholds[ti]);
      for (const auto& s : own) {
        const NetBenefitReport r = split_report(models[k], s, t);
        nb_by[k][ti].push_back(r.net_benefit);
        nb.rows.push_back({format_double(thresholds[ti]), models[k].name, s, std::to_string(r.tp_count),
                           std::to_string(r.fp_count), std::to_string(r.n), format_double(r.net_benefit)});
      }
    }
  }

  std::vector<std::pair<std::string, std::string>> files{{"nb.csv", format_csv(nb)}};
  const std::size_t compared = models.size() - (a.reference ? 2 : 0);
  if (compared == 2) {
    if (split_order(models[1].split) != splits) {
      throw DataError("the two models must be scored on the same splits for a paired difference");
    }
    if (splits.size() < 2) {
      err << "warning: paired NB differences need at least two splits; delta.csv not written\n";
    } else {
      CsvTable delta;
      delta.header = {"threshold", "model_a", "model_b", "m", "mean_delta", "se_delta"};
      for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
        const PairedDelta d = paired_delta(nb_by[0][ti], nb_by[1][ti]);
        delta.rows.push_back({format_double(thresholds[ti]), models[0].name, models[1].name,
                              std::to_string(splits.size()), format_double(d.mean_delta),
                              format_double(d.se_delta)});
      }
      files.emplace_back("delta.csv", format_csv(delta));
    }
  }

  if (a.calibration_bins > 0) {
    CsvTable cal;
    cal.header = {"model", "bin_lower", "bin_upper", "count", "mean_predicted", "observed_fraction"};
    for (std::size_t k = 0; k < compared; ++k) {
      const auto curve = calibration_curve(models[k].probability, models[k].outcome, a.calibration_bins);
      for (std::size_t b = 0; b < curve.counts.size(); ++b) {
        cal.rows.push_back({models[k].name, format_double(curve.edges[b]), format_double(curve.edges[b + 1]),
                            std::to_string(curve.counts[b]), format_double(curve.mean_predicted[b]),
                            format_double(curve.observed_fraction[b])});
      }
    }
    files.emplace_back("calibration.csv", format_csv(cal));
  }

  if (a.out.empty()) {
    out << files[0].second;
  } else {
    write_outputs(a.out, files);
    out << "wrote " << files.size() << " table(s) to " << a.out << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string scenario;
  std::size_t n = 0;
  double q = 1.0;
  double prevalence = 0.5;
  double psi = 0.0;
  std::uint64_t seed = 1;
  bool clean = false;
  bool oracle = false;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream&) {
  SimulatedData sim;
  Json config;
  if (a.scenario == "sim1") {
    Sim1Config c;
    c.n = a.n ? a.n : c.n;
    c.q = a.q;
    c.seed = a.seed;
    sim = generate_sim1(c);
    config = {{"n", c.n}, {"q", c.q}};
  } else if (a.scenario == "sim2") {
    Sim2Config c;
    c.n = a.n ? a.n : c.n;
    c.prior_positive = a.prevalence;
    c.seed = a.seed;
    sim = generate_sim2(c);
    config = {{"n", c.n}, {"prevalence", c.prior_positive}};
  } else if (a.scenario == "sim3") {
    Sim3Config c;
    c.n = a.n ? a.n : c.n;
    c.psi = a.psi;
    c.seed = a.seed;
    c.clean = a.clean;
    sim = generate_sim3(c);
    config = {{"n", c.n},
              {"psi", c.psi},
              {"beta", c.beta},
              {"contaminant_mean", c.contaminant_mean},
              {"contaminant_sd", c.contaminant_sd},
              {"clean", c.clean}};
  } else {
    throw ConfigError("unknown scenario '" + a.scenario + "'; expected sim1, sim2 or sim3");
  }

  const bool sim3 = a.scenario == "sim3";
  CsvTable table;
  table.header = {"x1", "x2", "y"};
  std::vector<std::string> oracle_columns;
  if (a.oracle) {
    oracle_columns.push_back("true_probability");
    if (sim3) oracle_columns.push_back("contaminated");
  }
  table.header.insert(table.header.end(), oracle_columns.begin(), oracle_columns.end());
  for (std::size_t i = 0; i < sim.data.n(); ++i) {
    const auto row = sim.data.row(i);
    std::vector<std::string> r{format_double(row[1]), format_double(row[2]), std::to_string(sim.data.outcome(i))};
    if (a.oracle) {
      r.push_back(format_double(sim.true_probability[i]));
      if (sim3) r.push_back(sim.contaminated[i] ? "1" : "0");
    }
    table.rows.push_back(std::move(r));
  }

  std::size_t contaminated = 0;
  for (bool c : sim.contaminated) contaminated += c ? 1 : 0;
  Json meta;
  meta["format_version"] = kManifestVersion;
  meta["command"] = "simulate";
  meta["scenario"] = a.scenario;
  meta["seed"] = a.seed;
  meta["config"] = config;
  meta["rows"] = sim.data.n();
  meta["positives"] = sim.data.positives();
  meta["contaminated_rows"] = contaminated;
  meta["columns"] = table.header;
  meta["oracle_columns"] = oracle_columns;

  const std::string csv = format_csv(table);
  if (a.out.empty()) {
    out << csv;
    return kOk;
  }
  const fs::path target(a.out);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw IoError("cannot create '" + target.parent_path().string() + "': " + ec.message());
  }
  write_text_file(a.out, csv);
  write_text_file(a.out + ".meta.json", dump(meta));
  return kOk;
}

// ---------------------------------------------------------------------------
// reproduce

struct ReproduceArgs {
  std::string figure;
  double scale = 1.0;
  std::string out;
  std::string sizes;
  std::string scenarios;
  std::string thresholds;
  std::size_t test_size = 2000;
  std::uint64_t seed = 1;
  bool quiet = false;
  TuningArgs tuning;
  SamplerArgs sampler;
};

int cmd_reproduce(const ReproduceArgs& a, std::ostream& out, std::ostream& err) {
  ReproduceConfig cfg;
  cfg.figure = parse_figure(a.figure);
  cfg.scale = a.scale;
  if (!a.sizes.empty()) cfg.sample_sizes = parse_size_list(a.sizes);
  if (!a.scenarios.empty()) cfg.scenario_values = parse_number_list(a.scenarios);
  if (!a.thresholds.empty()) cfg.thresholds = parse_number_list(a.thresholds);
  cfg.test_size = a.test_size;
  cfg.seed = a.seed;
  a.tuning.apply(cfg.pipeline);
  cfg.pipeline.sampler = a.sampler.config(a.seed);
  cfg.apply_defaults();
  cfg.validate();
  if (a.out.empty()) throw ConfigError("--out is required");

  ProgressFn progress;
  if (!a.quiet) progress = [&err](const std::string& msg) { err << msg << "\n"; };
  const ReproduceResult result = reproduce(cfg, progress);

  const std::string axis = scenario_name(cfg.figure);
  Json m;
  m["format_version"] = kManifestVersion;
  m["command"] = "reproduce";
  m["figure"] = to_string(cfg.figure);
  m["scale"] = cfg.scale;
  m["repetitions"] = cfg.repetitions();
  m["seed"] = cfg.seed;
  m["sample_sizes"] = cfg.sample_sizes;
  m["scenario_axis"] = axis;
  m["scenario_values"] = cfg.scenario_values;
  m["thresholds"] = cfg.thresholds;
  m["test_size"] = cfg.test_size;
  m["pipeline"] = {{"design_fraction", cfg.pipeline.design_fraction},
                   {"folds", cfg.pipeline.folds},
                   {"lambda_grid", cfg.pipeline.lambda_grid},
                   {"distance", cfg.pipeline.distance.to_string()},
                   {"prior_sd", cfg.pipeline.prior_sd}};
  m["sampler"] = sampler_json(cfg.pipeline.sampler);
  m["files"] = {"manifest.json", "nb.csv", "delta.csv"};

  write_outputs(a.out, {{"manifest.json", dump(m)},
                        {"nb.csv", format_csv(nb_table(result.nb_rows, axis))},
                        {"delta.csv", format_csv(delta_table(result.delta_rows, axis))}});
  out << format_csv(delta_table(result.delta_rows, axis));
  return kOk;
}

// ---------------------------------------------------------------------------
// ess-grid

struct EssGridArgs {
  std::string pi_u;
  std::string lambda_grid = "0,1,2,5,10,25,50,100";
  std::string distance = "squared";
  double floor = kDefaultEssFloor;
  std::string out;
  ThresholdArgs threshold;
};

int cmd_ess_grid(const EssGridArgs& a, std::ostream& out, std::ostream& err) {
  const TargetThreshold t = a.threshold.resolve();
  const auto grid = normalize_lambda_grid(parse_number_list(a.lambda_grid));
  const auto distance = DistanceFunction::parse(a.distance);
  if (!(a.floor >= 0.0 && a.floor <= 1.0)) throw ConfigError("--floor must lie in [0, 1]");
  const auto pi_u = read_pi_u(a.pi_u);
  if (pi_u.empty()) throw DataError("'" + a.pi_u + "' holds no pi_u values");

  CsvTable table;
  table.header = {"lambda", "ess", "ess_fraction", "below_floor"};
  for (const auto& r : ess_grid(pi_u, t, grid, distance, a.floor)) {
    table.rows.push_back({format_double(r.lambda), format_double(r.ess), format_double(r.ess_fraction),
                          r.below_floor ? "true" : "false"});
    if (r.below_floor) {
      err << "warning: lambda=" << format_double(r.lambda) << " keeps ESS fraction "
          << format_double(r.ess_fraction) << " below the floor " << format_double(a.floor) << "\n";
    }
  }
  emit(a.out, format_csv(table), out);
  return kOk;
}

// ---------------------------------------------------------------------------
// threshold-band

struct BandArgs {
  double min_benefit = 0.0;
  double max_benefit = 0.0;
  double rrr = 0.0;
};

int cmd_threshold_band(const BandArgs& a, std::ostream& out) {
  const ThresholdBand band = threshold_band_from_benefit(a.min_benefit, a.max_benefit, a.rrr);
  CsvTable table;
  table.header = {"lower", "upper"};
  table.rows.push_back({format_double(band.lower), format_double(band.upper)});
  out << format_csv(table);
  return kOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kUsageError;
  if (dynamic_cast<const DataError*>(&e)) return kDataError;
  if (dynamic_cast<const SamplerError*>(&e)) return kSamplerError;
  if (dynamic_cast<const IoError*>(&e)) return kIoError;
  if (dynamic_cast<const RecalibrationError*>(&e)) return kRecalibrationError;
  return kFailure;
}

}  // namespace

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::map<std::string, std::string> entries;
  std::istringstream in(read_text_file(path));
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(number) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    if (key.empty()) throw ConfigError(path + ":" + std::to_string(number) + ": empty key");
    entries[key] = trim(line.substr(eq + 1));
  }
  return entries;
}

std::vector<std::string> merge_config(const std::vector<std::string>& args) {
  std::vector<std::string> kept;
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ConfigError("--config needs a file");
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      kept.push_back(args[i]);
    }
  }
  if (config_path.empty()) return kept;

  auto given = [&](const std::string& key) {
    const std::string flag = "--" + key;
    return std::ranges::any_of(kept, [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
  };
  for (const auto& [key, value] : read_config_file(config_path)) {
    if (given(key)) continue;
    if (value == "true") {
      kept.push_back("--" + key);
    } else if (value != "false") {
      kept.push_back("--" + key + "=" + value);
    }
  }
  return kept;
}

std::vector<double> parse_number_list(const std::string& text) {
  const std::string s = trim(text);
  if (s.find(':') != std::string::npos) {
    const auto parts = split_list(s, ':');
    if (parts.size() != 3) throw ConfigError("range '" + s + "' must look like start:stop:step");
    const double start = parse_double(parts[0], "range start");
    const double stop = parse_double(parts[1], "range stop");
    const double step = parse_double(parts[2], "range step");
    if (!(step > 0.0) || stop < start) throw ConfigError("range '" + s + "' needs step > 0 and stop >= start");
    std::vector<double> out;
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
    for (std::size_t k = 0; k <= count; ++k) {
      // rounding keeps 0.1 + 3 * 0.05 from printing as 0.25000000000000006
      out.push_back(std::round((start + static_cast<double>(k) * step) * 1e10) / 1e10);
    }
    return out;
  }
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    try {
      out.push_back(parse_double(item, "list entry"));
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
  }
  return out;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tailored Bayesian logistic regression", "tailored"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", "tailored 1.0.0");
  int jobs = 0;
  app.add_option("--jobs", jobs, "OpenMP worker threads (default: all cores)");

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "fit the two-stage tailored model");
  fit->add_option("data", fit_args.data, "training CSV")->required();
  fit->add_option("--out", fit_args.out, "output directory")->required();
  fit_args.threshold.add(fit);
  fit_args.tuning.add(fit);
  fit_args.sampler.add(fit);
  fit->add_option("--outcome", fit_args.outcome, "outcome column")->capture_default_str();
  fit->add_option("--drop", fit_args.drop, "comma list of columns to ignore");
  fit->add_option("--pi-u", fit_args.pi_u, "CSV with a pi_u column, one row per training row");
  fit->add_flag("--standardize", fit_args.standardize, "z-score covariates before fitting");
  fit->add_option("--ess-floor", fit_args.ess_floor, "warn when ESS/n falls below this")->capture_default_str();
  fit->add_option("--seed", fit_args.seed, "base seed")->capture_default_str();
  fit_args.split_seed_opt = fit->add_option("--split-seed", fit_args.split_seed, "override the split seed");
  fit_args.cv_seed_opt = fit->add_option("--cv-seed", fit_args.cv_seed, "override the fold seed");
  fit_args.sampler_seed_opt = fit->add_option("--sampler-seed", fit_args.sampler_seed, "override the sampler seed");
  fit->add_option("--chains", fit_args.chains, "final-fit chains; two or more report R-hat")->capture_default_str();

  PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "posterior predictive probabilities for new rows");
  predict->add_option("data", predict_args.data, "CSV with the training covariates")->required();
  predict->add_option("--model", predict_args.model, "directory written by fit")->required();
  predict->add_option("--out", predict_args.out, "output CSV (default: stdout)");
  predict->add_option("--histogram", predict_args.histogram, "per-row histogram CSV of predictive draws");
  predict->add_option("--bins", predict_args.bins, "histogram bins")->capture_default_str();

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Net Benefit tables across thresholds");
  evaluate->add_option("--predictions", eval_args.predictions, "predictions CSV (repeatable)");
  evaluate->add_option("--model", eval_args.models, "fitted model directory (repeatable; needs --data)");
  evaluate->add_option("--names", eval_args.names, "comma list of model names");
  evaluate->add_option("--data", eval_args.data, "CSV holding outcomes (and optionally split)");
  evaluate->add_option("--outcome", eval_args.outcome, "outcome column")->capture_default_str();
  evaluate->add_option("--thresholds", eval_args.thresholds, "comma list or a:b:step")->capture_default_str();
  evaluate->add_option("--out", eval_args.out, "output directory (default: nb table on stdout)");
  evaluate->add_option("--calibration-bins", eval_args.calibration_bins, "also write calibration.csv");
  evaluate->add_flag("--reference", eval_args.reference, "add treat-all and treat-none rows");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "draw a synthetic benchmark dataset");
  simulate->add_option("--scenario", sim_args.scenario, "sim1, sim2 or sim3")->required();
  simulate->add_option("--n", sim_args.n, "rows (sim3: before contamination)");
  simulate->add_option("--q", sim_args.q, "sim1 class-balance parameter")->capture_default_str();
  simulate->add_option("--prevalence", sim_args.prevalence, "sim2 class prior")->capture_default_str();
  simulate->add_option("--psi", sim_args.psi, "sim3 contamination fraction")->capture_default_str();
  simulate->add_option("--seed", sim_args.seed, "generator seed")->capture_default_str();
  simulate->add_flag("--clean", sim_args.clean, "sim3: skip contamination");
  simulate->add_flag("--oracle", sim_args.oracle, "include true probabilities");
  simulate->add_option("--out", sim_args.out, "output CSV (default: stdout)");

  ReproduceArgs rep_args;
  auto* reproduce_cmd = app.add_subcommand("reproduce", "rerun a synthetic benchmark figure");
  reproduce_cmd->add_option("--figure", rep_args.figure, "sim1-fig2, sim2-fig4 or sim3-fig6")->required();
  reproduce_cmd->add_option("--scale", rep_args.scale, "fraction of the 20 repetitions")->capture_default_str();
  reproduce_cmd->add_option("--out", rep_args.out, "output directory")->required();
  reproduce_cmd->add_option("--sizes", rep_args.sizes, "training sizes");
  reproduce_cmd->add_option("--scenarios", rep_args.scenarios, "q, prevalence or psi values");
  reproduce_cmd->add_option("--thresholds", rep_args.thresholds, "target thresholds");
  reproduce_cmd->add_option("--test-size", rep_args.test_size, "rows per test set")->capture_default_str();
  reproduce_cmd->add_option("--seed", rep_args.seed, "base seed")->capture_default_str();
  reproduce_cmd->add_flag("--quiet", rep_args.quiet, "no progress lines");
  rep_args.tuning.add(reproduce_cmd);
  rep_args.sampler.add(reproduce_cmd);

  EssGridArgs ess_args;
  auto* ess_cmd = app.add_subcommand("ess-grid", "effective sample size across a lambda grid");
  ess_cmd->add_option("pi_u", ess_args.pi_u, "CSV with a pi_u column")->required();
  ess_args.threshold.add(ess_cmd);
  ess_cmd->add_option("--lambda-grid", ess_args.lambda_grid, "comma list or a:b:step")->capture_default_str();
  ess_cmd->add_option("--distance", ess_args.distance, "squared or eps:<value>")->capture_default_str();
  ess_cmd->add_option("--floor", ess_args.floor, "ESS fraction floor")->capture_default_str();
  ess_cmd->add_option("--out", ess_args.out, "output CSV (default: stdout)");

  BandArgs band_args;
  auto* band = app.add_subcommand("threshold-band", "target thresholds from an absolute-benefit band");
  band->add_option("--min-benefit", band_args.min_benefit, "smallest worthwhile absolute risk reduction")
      ->required();
  band->add_option("--max-benefit", band_args.max_benefit, "largest worthwhile absolute risk reduction")
      ->required();
  band->add_option("--rrr", band_args.rrr, "relative risk reduction of the treatment")->required();

  try {
    std::vector<std::string> args = merge_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }

  try {
    if (jobs < 0) throw ConfigError("--jobs must be positive");
    if (jobs > 0) omp_set_num_threads(jobs);
    if (*fit) return cmd_fit(fit_args, out, err);
    if (*predict) return cmd_predict(predict_args, out, err);
    if (*evaluate) return cmd_evaluate(eval_args, out, err);
    if (*simulate) return cmd_simulate(sim_args, out, err);
    if (*reproduce_cmd) return cmd_reproduce(rep_args, out, err);
    if (*ess_cmd) return cmd_ess_grid(ess_args, out, err);
    if (*band) return cmd_threshold_band(band_args, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kFailure;
}

}  // namespace tailored::cli

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tailored/error.hpp"
#include "tailored/sampler.hpp"
#include "tailored/tuning.hpp"

using namespace tailored;

namespace {

double standard_normal(std::span<const double> x) { return -0.5 * x[0] * x[0]; }

PosteriorSamples constant_chain(std::size_t s, std::size_t dim, double offset, oracle::Gen& gen) {
  PosteriorSamples p;
  p.draws = Matrix(s, dim);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < dim; ++j) p.draws(i, j) = offset + gen.normal();
  }
  return p;
}

}  // namespace

TEST_SUITE("sampler") {
  TEST_CASE("standard normal target") {
    SamplerConfig cfg;
    cfg.n_iterations = 50000;
    cfg.burn_in = 5000;
    cfg.rng_seed = 101;
    const PosteriorSamples s = run_mh(standard_normal, 1, cfg);
    const auto x = s.draws.column(0);
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(x.size() - 1));
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(sd - 1.0) < 0.05);
    CHECK(s.acceptance_rate >= 0.15);
    CHECK(s.acceptance_rate <= 0.35);
    CHECK(s.size() == 45000);
  }

  TEST_CASE("stationary histogram matches the target") {
    // frozen proposal: a plain Metropolis kernel whose invariant law is N(0, 1)
    SamplerConfig cfg;
    cfg.n_iterations = 200000;
    cfg.burn_in = 1000;
    cfg.initial_sd = 2.4;
    cfg.adapt_during_burn_in = false;
    cfg.rng_seed = 103;
    const PosteriorSamples s = run_mh(standard_normal, 1, cfg);
    const std::vector<double> edges{-INFINITY, -2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5, 2, INFINITY};
    auto cdf = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
    std::vector<double> counts(edges.size() - 1, 0.0);
    for (double v : s.draws.column(0)) {
      const auto it = std::upper_bound(edges.begin(), edges.end(), v);
      counts[static_cast<std::size_t>(it - edges.begin()) - 1] += 1.0;
    }
    double tv = 0.0;
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
      const double expected = cdf(edges[b + 1]) - cdf(edges[b]);
      tv += std::abs(counts[b] / static_cast<double>(s.size()) - expected);
    }
    CHECK(0.5 * tv <= 0.05);
  }

  TEST_CASE("proposal adaptation") {
    CHECK(adapt_proposal_sd(0.5, 0.24, 3, 0.24) == 0.5);
    CHECK(adapt_proposal_sd(0.5, 1.0, 3, 0.24) > 0.5);
    CHECK(adapt_proposal_sd(0.5, 0.0, 3, 0.24) < 0.5);
    CHECK(adapt_proposal_sd(1e-9, 0.0, 1, 0.24) == kMinProposalSd);
    CHECK(adapt_proposal_sd(999.0, 1.0, 1, 0.24) == kMaxProposalSd);
    // gains shrink with the batch index
    const double early = adapt_proposal_sd(1.0, 1.0, 1, 0.24);
    const double late = adapt_proposal_sd(1.0, 1.0, 100, 0.24);
    CHECK(early > late);
  }

  TEST_CASE("adaptation rescues a badly scaled start") {
    for (double sd0 : {1e-4, 50.0}) {
      SamplerConfig cfg;
      cfg.n_iterations = 30000;
      cfg.burn_in = 10000;
      cfg.initial_sd = sd0;
      cfg.rng_seed = 107;
      const PosteriorSamples s = run_mh(standard_normal, 1, cfg);
      CHECK(s.acceptance_rate >= 0.15);
      CHECK(s.acceptance_rate <= 0.35);
    }
  }

  TEST_CASE("proposal sd is frozen after burn-in") {
    const PosteriorSamples s = run_mh(standard_normal, 1, fixtures::quick_sampler(5));
    for (double sd : s.proposal_sd_trace) CHECK(sd == s.final_proposal_sd);
  }

  TEST_CASE("determinism") {
    const auto a = run_mh(standard_normal, 1, fixtures::quick_sampler(9));
    const auto b = run_mh(standard_normal, 1, fixtures::quick_sampler(9));
    const auto c = run_mh(standard_normal, 1, fixtures::quick_sampler(10));
    CHECK(a.draws == b.draws);
    CHECK(a.acceptance_rate == b.acceptance_rate);
    CHECK_FALSE(a.draws == c.draws);
  }

  TEST_CASE("non-finite proposals are rejected") {
    auto half_normal = [](std::span<const double> x) {
      return x[0] < 0.0 ? -std::numeric_limits<double>::infinity() : -0.5 * x[0] * x[0];
    };
    SamplerConfig cfg = fixtures::quick_sampler(13);
    cfg.initial_beta = {1.0};
    const auto s = run_mh(half_normal, 1, cfg);
    for (double v : s.draws.column(0)) CHECK(v >= 0.0);
    CHECK(s.nonfinite_rejections > 0);

    auto nan_density = [](std::span<const double> x) {
      return x[0] > 2.0 ? std::numeric_limits<double>::quiet_NaN() : -0.5 * x[0] * x[0];
    };
    const auto t = run_mh(nan_density, 1, fixtures::quick_sampler(14));
    for (double v : t.draws.column(0)) CHECK(v <= 2.0);

    cfg.initial_beta = {-1.0};
    CHECK_THROWS_AS(run_mh(half_normal, 1, cfg), SamplerError);
  }

  TEST_CASE("configuration validation") {
    SamplerConfig cfg;
    cfg.burn_in = cfg.n_iterations;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SamplerConfig{};
    cfg.thin = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SamplerConfig{};
    cfg.initial_sd = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SamplerConfig{};
    cfg.target_acceptance = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SamplerConfig{};
    cfg.thin = 7;
    CHECK(cfg.retained() == 15000 / 7);
    cfg.initial_beta = {0.0, 0.0};
    CHECK_THROWS_AS(run_mh(standard_normal, 1, cfg), DimensionError);
  }

  TEST_CASE("HPD interval examples") {
    const std::vector<double> same(50, 2.5);
    const Interval c = hpd_interval(same, 0.9);
    CHECK(c.lower == 2.5);
    CHECK(c.upper == 2.5);

    std::vector<double> ramp(100);
    std::iota(ramp.begin(), ramp.end(), 1.0);
    const Interval r = hpd_interval(ramp, 0.9);
    CHECK(r.width() == 89.0);
    const auto brute = oracle::shortest_window(ramp, 90);
    CHECK(brute.upper - brute.lower == 89.0);

    CHECK_THROWS_AS(hpd_interval(ramp, 1.0), ConfigError);
    CHECK_THROWS_AS(hpd_interval(std::vector<double>{}, 0.9), DataError);
  }

  TEST_CASE("HPD interval matches brute force on random samples") {
    oracle::Gen gen(37);
    for (int rep = 0; rep < 60; ++rep) {
      const std::size_t s = 5 + gen.index(60);
      std::vector<double> draws(s);
      // skewed draws so the shortest window is not centered
      for (double& v : draws) v = std::exp(gen.normal());
      const double mass = gen.uniform(0.5, 0.97);
      const auto count = static_cast<std::size_t>(std::ceil(mass * static_cast<double>(s) - 1e-9));
      const Interval got = hpd_interval(draws, mass);
      const auto brute = oracle::shortest_window(draws, count);
      CHECK(got.width() == doctest::Approx(brute.upper - brute.lower).epsilon(1e-15));
      std::size_t inside = 0;
      for (double v : draws) inside += (v >= got.lower && v <= got.upper) ? 1 : 0;
      CHECK(inside >= count);
    }
  }

  TEST_CASE("HPD of a symmetric sample is near-symmetric about the median") {
    oracle::Gen gen(41);
    std::vector<double> draws(200000);
    for (double& v : draws) v = gen.normal(3.0, 2.0);
    const Interval i = hpd_interval(draws, 0.9);
    std::ranges::sort(draws);
    const double median = 0.5 * (draws[99999] + draws[100000]);
    CHECK(std::abs((median - i.lower) - (i.upper - median)) < 0.1);
  }

  TEST_CASE("summaries") {
    oracle::Gen gen(43);
    PosteriorSamples s = constant_chain(400, 2, 0.0, gen);
    for (std::size_t i = 0; i < 400; ++i) s.draws(i, 1) = -1.25;
    const HpdSummary summary = summarize(s);
    CHECK(summary.mass == 0.9);
    CHECK(summary.coefficients[1].mean == -1.25);
    CHECK(summary.coefficients[1].median == -1.25);
    CHECK(summary.coefficients[1].hpd.lower == -1.25);
    CHECK(summary.coefficients[1].mc_standard_error == 0.0);
    CHECK(summary.coefficients[0].hpd95.width() >= summary.coefficients[0].hpd90.width());

    PosteriorSamples small = constant_chain(99, 1, 0.0, gen);
    CHECK_THROWS_AS(summarize(small), DataError);
  }

  TEST_CASE("batch-means standard error on independent draws") {
    oracle::Gen gen(47);
    std::vector<double> iid(40000);
    for (double& v : iid) v = gen.normal();
    const double se = batch_means_standard_error(iid);
    const double expected = 1.0 / std::sqrt(40000.0);
    CHECK(se > 0.6 * expected);
    CHECK(se < 1.4 * expected);
  }

  TEST_CASE("Gelman-Rubin diagnostic") {
    oracle::Gen gen(53);
    std::vector<PosteriorSamples> mixed{constant_chain(2000, 2, 0.0, gen), constant_chain(2000, 2, 0.0, gen),
                                        constant_chain(2000, 2, 0.0, gen)};
    for (double r : gelman_rubin(mixed)) CHECK(r < 1.01);
    std::vector<PosteriorSamples> stuck{constant_chain(2000, 2, 0.0, gen), constant_chain(2000, 2, 3.0, gen)};
    for (double r : gelman_rubin(stuck)) CHECK(r > 1.5);
    CHECK_THROWS_AS(gelman_rubin(std::span<const PosteriorSamples>(mixed.data(), 1)), ConfigError);
  }

  TEST_CASE("draws survive a CSV round trip bit for bit") {
    fixtures::TempDir dir;
    const auto s = run_mh(standard_normal, 1, fixtures::quick_sampler(59, 1200, 200));
    write_draws_csv(dir.file("d.csv"), s, {"b"});
    std::vector<std::string> names;
    const auto back = read_draws_csv(dir.file("d.csv"), &names);
    CHECK(names == std::vector<std::string>{"b"});
    CHECK(back.draws == s.draws);
    CHECK_THROWS_AS(write_draws_csv(dir.file("e.csv"), s, {"a", "b"}), DimensionError);
  }

  TEST_CASE("posterior mean matches grid quadrature") {
    oracle::Gen gen(61);
    auto raw = fixtures::logistic_data(gen, 50, {-0.5, 1.2});
    std::vector<double> x;
    for (const auto& row : raw.x) x.push_back(row[0]);
    const auto truth = oracle::grid_posterior_mean(x, raw.y, 100.0, -4.0, 3.0, -3.0, 6.0, 301);

    SamplerConfig cfg;
    cfg.rng_seed = 67;
    const PosteriorSamples s = fit_standard(raw.data, 100.0, cfg);
    const HpdSummary summary = summarize(s);
    for (std::size_t j = 0; j < 2; ++j) {
      CAPTURE(j);
      const auto& c = summary.coefficients[j];
      CHECK(std::abs(c.mean - truth.mean[j]) <= 3.0 * c.mc_standard_error);
    }
    CHECK(s.acceptance_rate >= 0.15);
    CHECK(s.acceptance_rate <= 0.35);
  }
}

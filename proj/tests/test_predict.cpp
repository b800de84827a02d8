#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "fixtures.hpp"
#include "tailored/error.hpp"
#include "tailored/predict.hpp"

using namespace tailored;

namespace {

PosteriorSamples from_rows(std::vector<std::vector<double>> rows) {
  PosteriorSamples s;
  s.draws = Matrix(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) s.draws(i, j) = rows[i][j];
  }
  return s;
}

}  // namespace

TEST_SUITE("predict") {
  TEST_CASE("single zero draw") {
    const auto r = posterior_predictive(std::vector<double>{1.0, 0.3}, from_rows({{0.0, 0.0}}));
    CHECK(r.mean_probability == 0.5);
    CHECK(r.predictive_sd == 0.0);
    CHECK(r.probability_draws.size() == 1);
  }

  TEST_CASE("two draws average their probabilities") {
    const double l2 = std::log(0.2 / 0.8);
    const double l4 = std::log(0.4 / 0.6);
    const auto r = posterior_predictive(std::vector<double>{1.0}, from_rows({{l2}, {l4}}));
    CHECK(r.mean_probability == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(r.predictive_sd == doctest::Approx(std::sqrt(0.02)).epsilon(1e-12));
  }

  TEST_CASE("degenerate posterior equals the plug-in probability") {
    const std::vector<double> beta{0.4, -1.1, 2.0};
    const auto s = from_rows({beta, beta, beta, beta});
    const std::vector<double> x{1.0, 0.7, 0.2};
    const double eta = 0.4 - 1.1 * 0.7 + 2.0 * 0.2;
    const auto r = posterior_predictive(x, s);
    CHECK(r.mean_probability == doctest::Approx(1.0 / (1.0 + std::exp(-eta))).epsilon(1e-15));
    CHECK(r.predictive_sd == 0.0);
  }

  TEST_CASE("batch predictive means agree with the per-row computation") {
    oracle::Gen gen(71);
    auto raw = fixtures::logistic_data(gen, 700, {0.0, 1.0, -1.0});
    std::vector<std::vector<double>> rows;
    for (int s = 0; s < 40; ++s) rows.push_back({gen.normal(), gen.normal(), gen.normal()});
    const auto samples = from_rows(rows);
    const auto means = predictive_means(raw.data, samples);
    REQUIRE(means.size() == 700);
    for (std::size_t i = 0; i < 700; ++i) {
      const auto r = posterior_predictive(raw.data.row(i), samples);
      CHECK(means[i] == doctest::Approx(r.mean_probability).epsilon(1e-14));
      CHECK(means[i] >= 0.0);
      CHECK(means[i] <= 1.0);
    }
  }

  TEST_CASE("input validation") {
    const auto s = from_rows({{0.0, 0.0}});
    CHECK_THROWS_AS(posterior_predictive(std::vector<double>{1.0}, s), DimensionError);
    CHECK_THROWS_AS(posterior_predictive(std::vector<double>{1.0}, PosteriorSamples{}), DataError);
  }

  TEST_CASE("classification at the threshold") {
    const TargetThreshold t(0.3);
    CHECK(classify(0.3, t) == Classification::positive);
    CHECK(classify(std::nextafter(0.3, 0.0), t) == Classification::negative);
    for (double tv : {0.01, 0.5, 0.99}) {
      CHECK(classify(0.0, TargetThreshold(tv)) == Classification::negative);
      CHECK(classify(1.0, TargetThreshold(tv)) == Classification::positive);
    }
    CHECK(to_string(Classification::positive) == "positive");
  }

  TEST_CASE("predictive histogram") {
    oracle::Gen gen(73);
    std::vector<std::vector<double>> rows;
    for (int s = 0; s < 500; ++s) rows.push_back({gen.normal(0.0, 2.0)});
    const auto r = posterior_predictive(std::vector<double>{1.0}, from_rows(rows));
    const auto h = predictive_histogram(r, 10);
    CHECK(std::accumulate(h.begin(), h.end(), std::size_t{0}) == 500);
    const auto one = predictive_histogram(posterior_predictive(std::vector<double>{1.0}, from_rows({{100.0}})), 4);
    CHECK(one[3] == 1);
    CHECK_THROWS_AS(predictive_histogram(r, 0), ConfigError);
  }
}

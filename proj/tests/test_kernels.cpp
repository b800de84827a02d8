#include <doctest.h>
#include <omp.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tailored/kernels.hpp"
#include "tailored/model.hpp"

using namespace tailored;

namespace {

// restores the thread count on scope exit
struct ThreadCount {
  explicit ThreadCount(int n) : saved(omp_get_max_threads()) { omp_set_num_threads(n); }
  ~ThreadCount() { omp_set_num_threads(saved); }
  int saved;
};

Matrix random_draws(oracle::Gen& gen, std::size_t s, std::size_t dim) {
  Matrix m(s, dim);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < dim; ++j) m(i, j) = gen.normal(0.0, 0.5);
  }
  return m;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("parallel kernels agree with the serial reference") {
    oracle::Gen gen(23);
    for (std::size_t n : {1u, 255u, 256u, 257u, 1000u, 5000u}) {
      CAPTURE(n);
      auto raw = fixtures::logistic_data(gen, n, {0.2, 1.0, -0.5, 0.7});
      std::vector<double> w(n);
      for (double& v : w) v = gen.uniform();
      const std::vector<double> beta{0.1, 0.9, -0.4, 0.8};

      const double par = kernels::weighted_log_likelihood(raw.data, beta, w);
      const double ser = kernels::weighted_log_likelihood_serial(raw.data, beta, w);
      CHECK(par == doctest::Approx(ser).epsilon(1e-12));
      CHECK(par == doctest::Approx(static_cast<double>(oracle::weighted_log_likelihood(raw.x, raw.y, beta, w)))
                       .epsilon(1e-12));

      std::vector<double> g_par(4), g_ser(4);
      kernels::weighted_score(raw.data, beta, w, g_par);
      kernels::weighted_score_serial(raw.data, beta, w, g_ser);
      for (std::size_t j = 0; j < 4; ++j) CHECK(g_par[j] == doctest::Approx(g_ser[j]).epsilon(1e-12));

      const Matrix draws = random_draws(gen, 50, 4);
      std::vector<double> p_par(n), p_ser(n);
      kernels::predictive_means(raw.data.design(), draws, p_par);
      kernels::predictive_means_serial(raw.data.design(), draws, p_ser);
      for (std::size_t i = 0; i < n; ++i) REQUIRE(p_par[i] == doctest::Approx(p_ser[i]).epsilon(1e-14));
    }
  }

  TEST_CASE("reductions do not depend on the thread count") {
    oracle::Gen gen(29);
    auto raw = fixtures::logistic_data(gen, 4099, {0.0, 1.0, 1.0});
    std::vector<double> w(raw.y.size());
    for (double& v : w) v = gen.uniform();
    const std::vector<double> beta{0.3, -0.2, 0.5};

    double reference = 0.0;
    std::vector<double> g_reference(3);
    {
      ThreadCount one(1);
      reference = kernels::weighted_log_likelihood(raw.data, beta, w);
      kernels::weighted_score(raw.data, beta, w, g_reference);
    }
    for (int threads : {2, 3, 4, 7}) {
      ThreadCount tc(threads);
      CHECK(kernels::weighted_log_likelihood(raw.data, beta, w) == reference);
      std::vector<double> g(3);
      kernels::weighted_score(raw.data, beta, w, g);
      CHECK(g == g_reference);
    }
  }

  TEST_CASE("kernels called inside a parallel region stay correct") {
    oracle::Gen gen(31);
    auto raw = fixtures::logistic_data(gen, 1500, {0.0, 1.0});
    const std::vector<double> w(1500, 1.0);
    const std::vector<double> beta{0.2, 0.4};
    const double expected = kernels::weighted_log_likelihood(raw.data, beta, w);
    std::vector<double> got(4, 0.0);
    ThreadCount tc(4);
#pragma omp parallel for
    for (int k = 0; k < 4; ++k) got[k] = kernels::weighted_log_likelihood(raw.data, beta, w);
    for (double v : got) CHECK(v == expected);
  }

  TEST_CASE("row log-likelihood handles extreme linear predictors") {
    Matrix x(2, 1);
    x(0, 0) = 1.0;
    x(1, 0) = -1.0;
    const Dataset data = Dataset::with_intercept({1, 0}, x);
    const std::vector<double> w{1.0, 1.0};
    const std::vector<double> beta{0.0, 900.0};
    // both rows are predicted correctly with overwhelming confidence
    CHECK(kernels::weighted_log_likelihood(data, beta, w) == doctest::Approx(0.0).epsilon(1e-300));
    const std::vector<double> wrong{0.0, -900.0};
    CHECK(kernels::weighted_log_likelihood(data, wrong, w) == doctest::Approx(-1800.0));
  }
}

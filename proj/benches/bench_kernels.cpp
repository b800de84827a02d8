// Serial reference kernels against the OpenMP versions.

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "tailored/kernels.hpp"
#include "tailored/model.hpp"

using namespace tailored;

namespace {

struct Problem {
  Dataset data;
  std::vector<double> weights;
  std::vector<double> beta;
  Matrix draws;
};

Problem make_problem(std::size_t n, std::size_t d) {
  std::mt19937_64 rng(n * 31 + d);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Matrix x(n, d);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double eta = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      x(i, j) = normal(rng);
      eta += x(i, j);
    }
    y[i] = uniform(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0;
  }
  Problem p{Dataset::with_intercept(y, x), std::vector<double>(n), std::vector<double>(d + 1, 0.3),
            Matrix(500, d + 1)};
  for (double& w : p.weights) w = uniform(rng);
  for (std::size_t s = 0; s < 500; ++s) {
    for (std::size_t j = 0; j <= d; ++j) p.draws(s, j) = normal(rng) * 0.1;
  }
  return p;
}

void BM_LogLikSerial(benchmark::State& state) {
  const Problem p = make_problem(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::weighted_log_likelihood_serial(p.data, p.beta, p.weights));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_LogLikParallel(benchmark::State& state) {
  const Problem p = make_problem(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::weighted_log_likelihood(p.data, p.beta, p.weights));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ScoreSerial(benchmark::State& state) {
  const Problem p = make_problem(static_cast<std::size_t>(state.range(0)), 5);
  std::vector<double> g(6);
  for (auto _ : state) {
    kernels::weighted_score_serial(p.data, p.beta, p.weights, g);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ScoreParallel(benchmark::State& state) {
  const Problem p = make_problem(static_cast<std::size_t>(state.range(0)), 5);
  std::vector<double> g(6);
  for (auto _ : state) {
    kernels::weighted_score(p.data, p.beta, p.weights, g);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PredictSerial(benchmark::State& state) {
  const Problem p = make_problem(static_cast<std::size_t>(state.range(0)), 2);
  std::vector<double> out(p.data.n());
  for (auto _ : state) {
    kernels::predictive_means_serial(p.data.design(), p.draws, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PredictParallel(benchmark::State& state) {
  const Problem p = make_problem(static_cast<std::size_t>(state.range(0)), 2);
  std::vector<double> out(p.data.n());
  for (auto _ : state) {
    kernels::predictive_means(p.data.design(), p.draws, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_LogLikSerial)->RangeMultiplier(4)->Range(1 << 8, 1 << 16);
BENCHMARK(BM_LogLikParallel)->RangeMultiplier(4)->Range(1 << 8, 1 << 16);
BENCHMARK(BM_ScoreSerial)->RangeMultiplier(4)->Range(1 << 8, 1 << 16);
BENCHMARK(BM_ScoreParallel)->RangeMultiplier(4)->Range(1 << 8, 1 << 16);
BENCHMARK(BM_PredictSerial)->Arg(1000)->Arg(5000);
BENCHMARK(BM_PredictParallel)->Arg(1000)->Arg(5000);

BENCHMARK_MAIN();

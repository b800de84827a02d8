#pragma once

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tailored/model.hpp"
#include "tailored/sampler.hpp"

namespace fixtures {

struct RawData {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  tailored::Dataset data;
};

/// Logistic data with standard-normal covariates and the given coefficients.
inline RawData logistic_data(oracle::Gen& gen, std::size_t n, const std::vector<double>& beta) {
  RawData raw;
  const std::size_t d = beta.size() - 1;
  tailored::Matrix x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(d);
    double eta = beta[0];
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = gen.normal();
      x(i, j) = row[j];
      eta += beta[j + 1] * row[j];
    }
    raw.y.push_back(gen.bernoulli(1.0 / (1.0 + std::exp(-eta))));
    raw.x.push_back(std::move(row));
  }
  raw.data = tailored::Dataset::with_intercept(raw.y, x);
  return raw;
}

inline tailored::SamplerConfig quick_sampler(std::uint64_t seed, std::size_t iterations = 3000,
                                             std::size_t burn_in = 1000) {
  tailored::SamplerConfig c;
  c.n_iterations = iterations;
  c.burn_in = burn_in;
  c.rng_seed = seed;
  return c;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("tailored_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures

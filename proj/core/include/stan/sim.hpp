#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stan/table.hpp"

namespace stan {

// Two-variable autoregressive test process:
//   x_t = 0.9 x_{t-1} + 0.1 e_t      e_t, u_t ~ N(0,1) independent
//   y_t = 0.9 x_t     + 0.1 u_t
// started from x_0 = 0 (so the first step is 0.1 e_1) with a 100-step
// burn-in discarded, leaving stationary draws:
//   var(x) = var(y) = 0.01 / (1 - 0.81),  corr(x_t, y_t) = 0.9,
//   corr(x_t, x_{t-1}) = 0.9.
struct SimSeries {
  std::vector<double> x, y;
  uint64_t seed = 0;

  size_t n() const { return x.size(); }
};

SimSeries simulate(size_t n, uint64_t seed);

// Sample Pearson correlation.  Throws on length mismatch, length < 2, or a
// zero-variance input.
double pearson_r(std::span<const double> a, std::span<const double> b);
// corr(s_t, s_{t-1}) of one sequence.
double lag1_r(std::span<const double> s);

// Ordinary least squares y ~ a*x + b.
struct LinearFit {
  double slope = 0, intercept = 0;
  double predict(double x) const { return slope * x + intercept; }
};
LinearFit fit_ols(std::span<const double> x, std::span<const double> y);

// The two regression tasks on the process: T1 predicts y_t from x_t and T2
// predicts x_{t+1} from x_t.  Linear regressors are fit on `train` and
// scored (mean squared error) on `test`.
struct SimTaskResult {
  double mse_t1 = 0, mse_t2 = 0;
};
SimTaskResult sim_tasks(const SimSeries& train, const SimSeries& test);

// Conversion to the tabular form the generative models consume (continuous
// columns "x", "y").
DataTable sim_to_table(const SimSeries& series);
SimSeries sim_from_table(const DataTable& table);

void write_sim_csv(const std::string& path, const SimSeries& series);

// ---------------------------------------------------------------------------
// End-to-end experiment: fit both mask variants and the mixture baseline on
// one simulated draw, re-generate, and compare correlations and task scores.
// ---------------------------------------------------------------------------
struct SimExperimentConfig {
  size_t n = 10000;
  uint64_t seed = 1;
  int k = 3;           // context rows
  int components = 10; // mixture components per head
  int epochs = 200;
  int batch_size = 128;
  int threads = 1;
  bool naive = true;        // heads consume the flattened window directly
  std::string scatter_dir;  // when set, per-series scatter CSVs go here

  nlohmann::json to_json() const;
  static SimExperimentConfig from_json(const nlohmann::json& j);
};

struct SimSeriesStats {
  double r_xy = 0;   // same-row correlation corr(x_t, y_t)
  double r_xx = 0;   // temporal correlation corr(x_t, x_{t-1})
  double mse_t1 = 0; // trained on this series, tested on held-out real data
  double mse_t2 = 0;

  nlohmann::json to_json() const;
};

struct SimExperimentReport {
  SimExperimentConfig config;
  // Keys: "real", "gmm", "stan_a", "stan_b".
  std::map<std::string, SimSeriesStats> series;
  double seconds = 0;

  nlohmann::json to_json() const;
};

SimExperimentReport run_sim_experiment(const SimExperimentConfig& cfg);

}  // namespace stan

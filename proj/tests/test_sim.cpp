// Simulated autoregressive process: generator statistics, correlation and
// regression helpers, and the tabular conversions used by the experiment.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "stan/flow.hpp"
#include "stan/rng.hpp"
#include "stan/sim.hpp"

using namespace stan;

TEST_CASE("simulate: deterministic per seed, stationary moments match theory") {
  const SimSeries a = simulate(10000, 42);
  const SimSeries b = simulate(10000, 42);
  REQUIRE(a.n() == 10000);
  CHECK(a.seed == 42);
  for (size_t i = 0; i < 100; ++i) {
    CHECK(a.x[i] == b.x[i]);
    CHECK(a.y[i] == b.y[i]);
  }
  const SimSeries c = simulate(1000, 43);
  CHECK(c.x[0] != a.x[0]);

  // var(x) = 0.01 / (1 - 0.81) ~ 0.0526; means are zero.
  double mx = 0, my = 0, vx = 0, vy = 0;
  for (size_t i = 0; i < a.n(); ++i) {
    mx += a.x[i];
    my += a.y[i];
  }
  mx /= a.n();
  my /= a.n();
  for (size_t i = 0; i < a.n(); ++i) {
    vx += (a.x[i] - mx) * (a.x[i] - mx);
    vy += (a.y[i] - my) * (a.y[i] - my);
  }
  vx /= a.n();
  vy /= a.n();
  const double theory = 0.01 / (1.0 - 0.81);
  CHECK(std::abs(mx) < 0.02);
  CHECK(std::abs(my) < 0.02);
  CHECK(vx == doctest::Approx(theory).epsilon(0.10));
  CHECK(vy == doctest::Approx(theory).epsilon(0.10));

  // corr(x_t, y_t) = corr(x_t, x_{t-1}) = 0.9.
  CHECK(pearson_r(a.x, a.y) == doctest::Approx(0.9).epsilon(0.025));
  CHECK(lag1_r(a.x) == doctest::Approx(0.9).epsilon(0.025));
  // y touches x through 0.9 at both ends of the lag: corr = 0.9^3 = 0.729.
  CHECK(lag1_r(a.y) == doctest::Approx(0.729).epsilon(0.04));
}

TEST_CASE("pearson: exact endpoints and error cases") {
  const std::vector<double> up = {1, 2, 3, 4}, down = {8, 6, 4, 2},
                            affine = {3, 5, 7, 9};
  CHECK(pearson_r(up, affine) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pearson_r(up, down) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK_THROWS_AS(pearson_r(up, std::vector<double>{1.0, 2.0}), Error);
  CHECK_THROWS_AS(pearson_r(std::vector<double>{1.0}, std::vector<double>{1.0}),
                  Error);
  const std::vector<double> flat = {5, 5, 5, 5};
  CHECK_THROWS_AS(pearson_r(up, flat), Error);

  // Independent streams decorrelate.
  Rng ra(7), rb(8);
  std::vector<double> u(20000), v(20000);
  for (size_t i = 0; i < u.size(); ++i) {
    u[i] = ra.normal();
    v[i] = rb.normal();
  }
  CHECK(std::abs(pearson_r(u, v)) < 0.03);
}

TEST_CASE("ols: recovers an exact linear relation") {
  std::vector<double> x, y;
  for (int i = 0; i < 50; ++i) {
    x.push_back(0.1 * i);
    y.push_back(2.5 * 0.1 * i - 1.25);
  }
  const LinearFit fit = fit_ols(x, y);
  CHECK(fit.slope == doctest::Approx(2.5).epsilon(1e-9));
  CHECK(fit.intercept == doctest::Approx(-1.25).epsilon(1e-9));
  CHECK(fit.predict(2.0) == doctest::Approx(2.5 * 2.0 - 1.25).epsilon(1e-9));

  // With noise, the fitted slope shrinks toward the population value.
  Rng rng(5);
  std::vector<double> xn, yn;
  for (int i = 0; i < 20000; ++i) {
    const double xi = rng.normal();
    xn.push_back(xi);
    yn.push_back(0.7 * xi + 0.2 + 0.1 * rng.normal());
  }
  const LinearFit noisy = fit_ols(xn, yn);
  CHECK(noisy.slope == doctest::Approx(0.7).epsilon(0.02));
  CHECK(noisy.intercept == doctest::Approx(0.2).epsilon(0.02));
}

TEST_CASE("sim tasks: both regressions reach the noise floor on real data") {
  const SimSeries train = simulate(10000, 11);
  const SimSeries test = simulate(10000, 12);
  const SimTaskResult r = sim_tasks(train, test);
  // T1: y = 0.9 x + 0.1 u -> best possible MSE = 0.01.
  CHECK(r.mse_t1 == doctest::Approx(0.01).epsilon(0.08));
  // T2: x' = 0.9 x + 0.1 e -> same noise floor.
  CHECK(r.mse_t2 == doctest::Approx(0.01).epsilon(0.08));
}

TEST_CASE("sim table: round trip through the tabular form") {
  const SimSeries s = simulate(500, 3);
  const DataTable t = sim_to_table(s);
  CHECK(t.rows() == 500);
  CHECK(t.cols() == 2);
  CHECK(t.schema().expanded()[0].name == "x");
  CHECK(t.schema().expanded()[1].name == "y");
  const SimSeries back = sim_from_table(t);
  REQUIRE(back.n() == s.n());
  for (size_t i = 0; i < s.n(); ++i) {
    CHECK(back.x[i] == s.x[i]);
    CHECK(back.y[i] == s.y[i]);
  }
}

TEST_CASE("sim csv: two named columns, full double precision") {
  const SimSeries s = simulate(50, 9);
  const auto path =
      (std::filesystem::temp_directory_path() / "stan_test_sim.csv").string();
  write_sim_csv(path, s);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "x,y");
  size_t rows = 0;
  std::string line;
  double first_x = 0;
  while (std::getline(in, line)) {
    if (rows == 0) first_x = std::stod(line.substr(0, line.find(',')));
    ++rows;
  }
  CHECK(rows == 50);
  CHECK(first_x == doctest::Approx(s.x[0]).epsilon(1e-12));
  std::filesystem::remove(path);
}

TEST_CASE("sim experiment config: JSON round trip") {
  SimExperimentConfig cfg;
  cfg.n = 4000;
  cfg.seed = 77;
  cfg.k = 5;
  cfg.epochs = 33;
  cfg.naive = false;
  const SimExperimentConfig back =
      SimExperimentConfig::from_json(cfg.to_json());
  CHECK(back.n == 4000);
  CHECK(back.seed == 77);
  CHECK(back.k == 5);
  CHECK(back.epochs == 33);
  CHECK(back.naive == false);
  CHECK(back.batch_size == cfg.batch_size);
}

TEST_CASE("sim experiment: miniature run produces the four series") {
  // A scaled-down configuration; statistical targets live in the acceptance
  // gate, so here we only require structure and sane ranges.
  SimExperimentConfig cfg;
  cfg.n = 1200;
  cfg.seed = 5;
  cfg.k = 2;
  cfg.components = 4;
  cfg.epochs = 12;
  cfg.batch_size = 128;
  const SimExperimentReport report = run_sim_experiment(cfg);
  REQUIRE(report.series.count("real") == 1);
  REQUIRE(report.series.count("gmm") == 1);
  REQUIRE(report.series.count("stan_a") == 1);
  REQUIRE(report.series.count("stan_b") == 1);
  CHECK(report.seconds > 0.0);

  const auto& real = report.series.at("real");
  CHECK(real.r_xy == doctest::Approx(0.9).epsilon(0.08));
  CHECK(real.r_xx == doctest::Approx(0.9).epsilon(0.08));
  // The independent baseline cannot carry any correlation.
  const auto& gmm = report.series.at("gmm");
  CHECK(std::abs(gmm.r_xy) < 0.1);
  CHECK(std::abs(gmm.r_xx) < 0.1);
  for (const auto& [name, st] : report.series) {
    CHECK(std::isfinite(st.mse_t1));
    CHECK(std::isfinite(st.mse_t2));
    CHECK(st.mse_t1 >= 0.0);
    CHECK(st.mse_t2 >= 0.0);
  }

  const nlohmann::json j = report.to_json();
  CHECK(j.contains("series"));
  CHECK(j["series"].contains("stan_b"));
  CHECK(j["series"]["real"].contains("r_xy"));
  CHECK(j.contains("config"));
}

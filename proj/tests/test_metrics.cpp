// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "gridattn/error.hpp"
#include "gridattn/metrics.hpp"
#include "helpers.hpp"
#include "metric_oracles.hpp"

using namespace gridattn;
using namespace gridattn::testing;

TEST_CASE("mape fixtures") {
  const Matrix y{{100}, {100}};
  CHECK(mape(y, y) == 0.0);
  CHECK(mape(y, Matrix{{90}, {110}}) == 0.0);
  CHECK(mape(y, Matrix{{90}, {90}}) == doctest::Approx(10.0).epsilon(1e-15));
}

TEST_CASE("mape rejects a zero national load and names the step") {
  const Matrix y{{1, 5, 2}, {-1, 5, 3}};
  try {
    mape(y, y, {"t0", "t1", "t2"});
    FAIL("expected MetricError");
  } catch (const MetricError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("t0") != std::string::npos);
    CHECK(msg.find("t1") == std::string::npos);
    CHECK(msg.find("metrics") != std::string::npos);
  }
}

TEST_CASE("rmse fixtures") {
  CHECK(rmse(Matrix{{1}, {2}}, Matrix{{1}, {2}}) == 0.0);
  CHECK(rmse(Matrix{{3}, {4}}, Matrix{{0}, {0}}) == 5.0);
  CHECK_THROWS_AS(rmse(Matrix(2, 2), Matrix(2, 3)), DimensionError);
}

TEST_CASE("metrics match double-loop oracles") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 8, t = 1 + rng() % 60;
    const Matrix y = random_matrix(n, t, rng, 10, 200), yhat = random_matrix(n, t, rng, 10, 200);
    CHECK(std::abs(mape(y, yhat) - naive_mape(y, yhat)) <= 1e-12);
    CHECK(std::abs(rmse(y, yhat) - naive_rmse(y, yhat)) <= 1e-12);
  }
}

TEST_CASE("metric symmetries") {
  std::mt19937_64 rng(9);
  const Matrix y = random_matrix(4, 30, rng, 50, 100), yhat = random_matrix(4, 30, rng, 50, 100);
  CHECK(mape(3.5 * y, 3.5 * yhat) == doctest::Approx(mape(y, yhat)).epsilon(1e-13));
  const Matrix err = yhat - y;
  CHECK(rmse(y, y + 2.0 * err) == doctest::Approx(2.0 * rmse(y, yhat)).epsilon(1e-13));
  Matrix py(4, 30), pyhat(4, 30);
  const std::size_t perm[] = {2, 0, 3, 1};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t t = 0; t < 30; ++t) {
      py(i, t) = y(perm[i], t);
      pyhat(i, t) = yhat(perm[i], t);
    }
  CHECK(rmse(py, pyhat) == doctest::Approx(rmse(y, yhat)).epsilon(1e-14));
}

TEST_CASE("forecast evaluation concatenates blocks") {
  ForecastResult r;
  r.node_ids = {"a", "b"};
  r.labels = {"2024-01-02", "2024-01-03"};
  r.starts = {0, 1440};
  r.truths = {Matrix{{100, 100}, {100, 100}}, Matrix{{50, 50}, {50, 50}}};
  r.predictions = {Matrix{{90, 90}, {90, 90}}, Matrix{{50, 50}, {50, 50}}};
  const MetricReport m = evaluate_forecast(r);
  CHECK(m.mape_percent == doctest::Approx(5.0));
  REQUIRE(m.block_mape.size() == 2);
  CHECK(m.block_mape[0] == doctest::Approx(10.0));
  CHECK(m.block_mape[1] == 0.0);
  CHECK(m.rmse == doctest::Approx(std::sqrt(200.0 * 2 / 4)));
  const std::string csv = report_csv(m);
  CHECK(csv.rfind("metric,value,scope\n", 0) == 0);
  CHECK(csv.find("mape,5,all") != std::string::npos);
  CHECK(csv.find(",2024-01-03") != std::string::npos);
}

TEST_CASE("attach_truth reads the panel at the block times") {
  const TimePanel p = calendar_panel(2, 96, [](std::size_t i, std::size_t t) { return 10.0 * i + t; });
  ForecastResult r;
  r.node_ids = {"n1", "n0"};
  r.labels = {"2024-01-02"};
  r.starts = {0};
  r.predictions = {Matrix(2, 48)};
  r.truths = {Matrix(2, 48)};
  attach_truth(r, p);
  CHECK(r.truths[0](0, 0) == 58.0);
  CHECK(r.truths[0](1, 47) == 95.0);
}

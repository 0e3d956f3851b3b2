// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "aggregation_checks.hpp"
#include "gridattn/csv.hpp"
#include "gridattn/error.hpp"
#include "helpers.hpp"

using namespace gridattn;
using namespace gridattn::testing;

namespace {

ForecastResult one_block(std::vector<std::string> nodes, Matrix pred, Matrix truth, std::string label = "2024-01-01") {
  ForecastResult r;
  r.node_ids = std::move(nodes);
  r.labels = {std::move(label)};
  r.starts = {0};
  r.predictions = {std::move(pred)};
  r.truths = {std::move(truth)};
  return r;
}

void check_simplex(const WeightTrajectory& w) {
  for (const auto& p : w.weights) {
    double s = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

}  // namespace

TEST_CASE("uniform aggregation fixtures") {
  const Matrix y{{0.0}};
  const ExpertPanel p = make_expert_panel({"a", "b"}, {one_block({"x"}, Matrix{{10}}, y), one_block({"x"}, Matrix{{20}}, y)});
  CHECK(uniform_aggregate(p).forecast.predictions[0](0, 0) == 15.0);
  const ExpertPanel single = make_expert_panel({"a"}, {one_block({"x"}, Matrix{{10}}, y)});
  CHECK(uniform_aggregate(single).forecast.predictions[0](0, 0) == 10.0);
  CHECK(mlpoly_aggregate(single).forecast.predictions[0](0, 0) == 10.0);
}

TEST_CASE("expert panels must align") {
  const Matrix y{{0.0}};
  CHECK_THROWS_AS(make_expert_panel({"a", "b"}, {one_block({"x"}, Matrix{{1}}, y), one_block({"z"}, Matrix{{1}}, y)}),
                  ContractError);
  CHECK_THROWS_AS(make_expert_panel({"a", "b"}, {one_block({"x"}, Matrix{{1}}, y), one_block({"x"}, Matrix{{1}}, Matrix{{2}})}),
                  ContractError);
  CHECK_THROWS_AS(make_expert_panel({"a"}, {one_block({"x"}, Matrix{{NAN}}, y)}), ContractError);
  CHECK_THROWS_AS(make_expert_panel({}, {}), ContractError);
}

TEST_CASE("uniform aggregation satisfies Jensen pointwise") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ExpertPanel p = expert_stream(20, 3, 48, {1.0, 3.0, 0.5, 2.0}, {0.5, -2.0, 0.0, 4.0}, seed);
    CHECK(jensen_excess(p) <= 1e-12);
  }
}

TEST_CASE("ml-poly update rule") {
  MlPoly m(3);
  CHECK(m.weights() == std::vector<double>(3, 1.0 / 3.0));
  // Aggregate loss 2; regrets (1, -1, 2); squared (1, 1, 4).
  m.update({1.0, 3.0, 0.0}, 2.0);
  const auto w = m.weights();
  const double a = 0.5 * 1.0, c = 0.2 * 2.0;
  CHECK(w[0] == doctest::Approx(a / (a + c)));
  CHECK(w[1] == 0.0);
  CHECK(w[2] == doctest::Approx(c / (a + c)));
  CHECK(m.regret() == std::vector<double>{1.0, -1.0, 2.0});

  MlPoly neg(2);
  neg.update({5.0, 5.0}, 1.0);
  CHECK(neg.weights() == std::vector<double>{0.5, 0.5});
}

TEST_CASE("identical experts keep uniform weights") {
  ExpertPanel p = expert_stream(50, 2, 48, {1.0}, {0.0}, 3);
  p = make_expert_panel({"a", "b", "c"}, {p.forecasts[0], p.forecasts[0], p.forecasts[0]});
  for (const auto& w : mlpoly_aggregate(p).weights.weights)
    for (double v : w) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("ml-poly finds a perfect expert") {
  const ExpertPanel p = expert_stream(1000, 1, 48, {2.0, 0.0}, {1.0, 0.0}, 5);
  const AggregateResult r = mlpoly_aggregate(p);
  check_simplex(r.weights);
  CHECK(r.weights.weights.front()[1] == 0.5);
  CHECK(r.weights.weights.back()[1] >= 0.99);
}

TEST_CASE("ml-poly competes with the best expert") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const ExpertPanel p = expert_stream(1000, 2, 48, {1.0, 1.5, 3.0, 5.0}, {0.0, 1.0, -2.0, 3.0}, seed);
    CHECK(mlpoly_loss_ratio(p) <= 1.05);
  }
}

TEST_CASE("ml-poly weights never look ahead") {
  const ExpertPanel p = expert_stream(60, 2, 48, {1.0, 2.0, 4.0}, {0.0, 1.0, -1.0}, 8);
  const auto full = mlpoly_aggregate(p).weights.weights;
  ExpertPanel cut = p;
  for (auto& f : cut.forecasts)
    for (std::size_t b = 31; b < f.blocks(); ++b) {
      f.truths[b] = Matrix(f.truths[b].rows(), f.truths[b].cols());
    }
  const auto partial = mlpoly_aggregate(cut).weights.weights;
  for (std::size_t b = 0; b <= 31; ++b) CHECK(partial[b] == full[b]);
  CHECK(partial[40] != full[40]);
}

TEST_CASE("hierarchies") {
  const ExpertPanel p = expert_stream(30, 3, 48, {1.0, 2.0}, {0.5, -1.0}, 4);
  const auto bu = hierarchical_aggregate(p, HierarchyLevel::kBottom, AggregationRule::kUniform);
  const auto tu = hierarchical_aggregate(p, HierarchyLevel::kTop, AggregationRule::kUniform);
  REQUIRE(bu.national.node_ids == std::vector<std::string>{kNationalId});
  for (std::size_t b = 0; b < 30; ++b) CHECK(max_abs_diff(bu.national.predictions[b], tu.national.predictions[b]) <= 1e-9);
  CHECK(bu.weight_scopes == std::vector<std::string>{"n0", "n1", "n2"});
  CHECK(tu.weight_scopes == std::vector<std::string>{kNationalId});

  const ExpertPanel one = expert_stream(30, 1, 48, {1.0, 2.0}, {0.5, -1.0}, 4);
  const auto b1 = hierarchical_aggregate(one, HierarchyLevel::kBottom, AggregationRule::kMlPoly);
  const auto t1 = hierarchical_aggregate(one, HierarchyLevel::kTop, AggregationRule::kMlPoly);
  CHECK(b1.national.predictions == t1.national.predictions);

  // Expert a is perfect on node 0, expert b on node 1.
  const ExpertPanel ab = expert_stream(40, 2, 48, {0.0, 0.0}, {0.0, 0.0}, 6);
  ExpertPanel het = ab;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0, 5);
  for (std::size_t b = 0; b < 40; ++b)
    for (std::size_t k = 0; k < 48; ++k) {
      het.forecasts[0].predictions[b](1, k) += z(rng);
      het.forecasts[1].predictions[b](0, k) += z(rng);
    }
  const auto bh = hierarchical_aggregate(het, HierarchyLevel::kBottom, AggregationRule::kMlPoly);
  const auto th = hierarchical_aggregate(het, HierarchyLevel::kTop, AggregationRule::kMlPoly);
  CHECK(bh.national.predictions != th.national.predictions);
  CHECK(bh.weights[0].weights.back()[0] > 0.99);
  CHECK(bh.weights[1].weights.back()[1] > 0.99);
}

TEST_CASE("national total and weights csv") {
  const ForecastResult r = one_block({"a", "b"}, Matrix{{1, 2}, {3, 4}}, Matrix{{0, 0}, {1, 1}});
  const ForecastResult n = national_total(r);
  CHECK(n.predictions[0] == Matrix{{4, 6}});
  CHECK(n.truths[0] == Matrix{{1, 1}});
  const ExpertPanel p = make_expert_panel({"x", "y"}, {r, r});
  const std::string csv = weights_csv(mlpoly_aggregate(p).weights);
  CHECK(csv == "date,expert,weight\n2024-01-01,x,0.5\n2024-01-01,y,0.5\n");
}

TEST_CASE("rule and level names") {
  CHECK(parse_aggregation_rule("mlpoly") == AggregationRule::kMlPoly);
  CHECK(parse_hierarchy_level("top") == HierarchyLevel::kTop);
  CHECK_THROWS_AS(parse_aggregation_rule("ewa"), ContractError);
}

TEST_CASE("expert directory reading") {
  const auto dir = std::filesystem::temp_directory_path() / "gridattn_experts_test";
  std::filesystem::create_directories(dir);
  const ExpertPanel p = expert_stream(3, 2, 48, {1.0, 2.0}, {0.0, 0.0}, 2);
  ForecastResult a = p.forecasts[0], b = p.forecasts[1];
  a.labels = b.labels = {"2024-01-01", "2024-01-02", "2024-01-03"};
  write_file_atomic(dir / "zeta.csv", forecast_csv(a));
  write_file_atomic(dir / "alpha.csv", forecast_csv(b));
  const ExpertPanel back = read_expert_dir(dir);
  CHECK(back.experts == std::vector<std::string>{"alpha", "zeta"});
  CHECK(max_abs_diff(back.forecasts[1].predictions[2], a.predictions[2]) == 0.0);
  std::filesystem::remove_all(dir);
}

// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "gridattn/csv.hpp"
#include "gridattn/error.hpp"
#include "gridattn/synthetic.hpp"
#include "helpers.hpp"

using namespace gridattn;
using namespace gridattn::testing;

namespace {

// Empirical mutual information (bits) between two binary sequences.
double mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
  double joint[2][2] = {};
  for (std::size_t t = 0; t < a.size(); ++t) joint[a[t]][b[t]] += 1.0;
  const double n = static_cast<double>(a.size());
  double mi = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double pij = joint[i][j] / n, pi = (joint[i][0] + joint[i][1]) / n, pj = (joint[0][j] + joint[1][j]) / n;
      if (pij > 0) mi += pij * std::log2(pij / (pi * pj));
    }
  return mi;
}

// Pearson chi-squared statistic of a 2x2 contingency table.
double chi_squared(const std::vector<int>& a, const std::vector<int>& b) {
  double obs[2][2] = {};
  for (std::size_t t = 0; t < a.size(); ++t) obs[a[t]][b[t]] += 1.0;
  const double n = static_cast<double>(a.size());
  double chi = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double e = (obs[i][0] + obs[i][1]) * (obs[0][j] + obs[1][j]) / n;
      chi += (obs[i][j] - e) * (obs[i][j] - e) / e;
    }
  return chi;
}

std::vector<int> row_bits(const Matrix& m, std::size_t r) {
  std::vector<int> out;
  for (double v : m.row(r)) out.push_back(static_cast<int>(v));
  return out;
}

std::vector<int> regime_bits(const std::vector<int>& regime) {
  std::vector<int> out;
  for (int r : regime) out.push_back(r == 1 ? 1 : 0);
  return out;
}

}  // namespace

TEST_CASE("coupling products") {
  std::mt19937_64 rng(1);
  const Matrix x = random_matrix(3, 5, rng);
  CHECK(apply_coupling(Matrix::identity(3), x) == x);
  CHECK(apply_coupling(2.0 * Matrix::identity(3), x) == 2.0 * x);
  const Matrix a{{1, 2, 0}, {0, 1, 3}, {4, 0, 1}};
  const Matrix col{{1}, {-1}, {2}};
  CHECK(apply_coupling(a, col) == Matrix{{-1}, {5}, {6}});
  CHECK_THROWS_AS(apply_coupling(Matrix(2, 2), x), DimensionError);
}

TEST_CASE("coupling matrices are sparse, positive and full rank") {
  std::mt19937_64 rng(3);
  std::size_t support = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_coupling(10, ScenarioOptions{}, rng);
    CHECK(rank(a) == 10);
    for (double v : a.values()) {
      CHECK((v == 0.0 || (v >= 0.5 && v <= 1.5)));
      support += v != 0.0;
    }
  }
  const double density = static_cast<double>(support) / (20.0 * 100.0);
  CHECK(density > 0.2);
  CHECK(density < 0.45);
}

TEST_CASE("targets follow the active coupling") {
  for (ScenarioKind kind : {ScenarioKind::kSingle, ScenarioKind::kExplicitSwitch, ScenarioKind::kAmbiguousSwitch}) {
    const Scenario s = generate_scenario(kind, 6, 300, 11);
    CHECK(s.scenario.a2.empty() == (kind == ScenarioKind::kSingle));
    const Matrix y1 = apply_coupling(s.scenario.a1, s.panel.x);
    const Matrix y2 = s.scenario.a2.empty() ? y1 : apply_coupling(s.scenario.a2, s.panel.x);
    for (std::size_t t = 0; t < 300; ++t) {
      const Matrix& ref = s.panel.regime[t] == 1 ? y1 : y2;
      for (std::size_t i = 0; i < 6; ++i) CHECK(s.panel.y(i, t) == ref(i, t));
    }
    CHECK(s.panel.exogenous.rows() == (kind == ScenarioKind::kSingle ? 0u : kind == ScenarioKind::kExplicitSwitch ? 1u : 2u));
  }
}

TEST_CASE("explicit indicator equals the regime") {
  const Scenario s = generate_scenario(ScenarioKind::kExplicitSwitch, 5, 2000, 7);
  CHECK(row_bits(s.panel.exogenous, 0) == regime_bits(s.panel.regime));
  std::size_t ones = 0;
  for (int r : s.panel.regime) ones += r == 1;
  CHECK(ones > 900);
  CHECK(ones < 1100);
}

TEST_CASE("ambiguous pair encodes the regime jointly but not marginally") {
  const Scenario s = generate_scenario(ScenarioKind::kAmbiguousSwitch, 5, 5000, 7);
  const auto e1 = row_bits(s.panel.exogenous, 0), e2 = row_bits(s.panel.exogenous, 1);
  const auto r = regime_bits(s.panel.regime);
  for (std::size_t t = 0; t < r.size(); ++t) CHECK((e1[t] == e2[t]) == (r[t] == 1));
  CHECK(mutual_information(e1, r) <= 0.01);
  CHECK(mutual_information(e2, r) <= 0.01);
  // Critical value of chi-squared with 1 dof at p = 0.01.
  CHECK(chi_squared(e1, r) < 6.635);
  CHECK(chi_squared(e2, r) < 6.635);
}

TEST_CASE("generation is deterministic") {
  const Scenario a = generate_scenario(ScenarioKind::kAmbiguousSwitch, 4, 200, 5);
  const Scenario b = generate_scenario(ScenarioKind::kAmbiguousSwitch, 4, 200, 5);
  const Scenario c = generate_scenario(ScenarioKind::kAmbiguousSwitch, 4, 200, 6);
  CHECK(panel_csv(a) == panel_csv(b));
  CHECK(coupling_csv(a.scenario.a1) == coupling_csv(b.scenario.a1));
  CHECK(panel_csv(a) != panel_csv(c));
}

TEST_CASE("signal shape: trend plus period-200 cycle plus noise") {
  ScenarioOptions quiet;
  quiet.noise_sd = 0.0;
  const Scenario s = generate_scenario(ScenarioKind::kSingle, 3, 1000, 2, quiet);
  for (std::size_t i = 0; i < 3; ++i) {
    // Without noise, x(t + P) - x(t) is the trend increment a_i * P / T.
    const double d0 = s.panel.x(i, 200) - s.panel.x(i, 0);
    for (std::size_t t = 0; t + 200 < 1000; t += 37) CHECK(s.panel.x(i, t + 200) - s.panel.x(i, t) == doctest::Approx(d0));
    CHECK(std::abs(d0) <= 0.5 * 200.0 / 1000.0 + 1e-12);
  }
  const Scenario noisy = generate_scenario(ScenarioKind::kSingle, 3, 1000, 2);
  const Matrix eps = noisy.panel.x - s.panel.x;
  double ss = 0.0;
  for (double v : eps.values()) ss += v * v;
  CHECK(std::sqrt(ss / eps.size()) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("scenario preconditions") {
  CHECK_THROWS_AS(generate_scenario(ScenarioKind::kSingle, 1, 200, 1), ContractError);
  CHECK_THROWS_AS(generate_scenario(ScenarioKind::kSingle, 3, 95, 1), ContractError);
  CHECK(parse_scenario_kind("explicit_switch") == ScenarioKind::kExplicitSwitch);
  CHECK_THROWS_AS(parse_scenario_kind("chaotic"), ContractError);
}

TEST_CASE("time panel view and csv round trip") {
  const Scenario s = generate_scenario(ScenarioKind::kAmbiguousSwitch, 3, 120, 4);
  const TimePanel p = to_time_panel(s);
  CHECK_FALSE(p.calendar);
  CHECK(p.channels() == 3);
  CHECK(p.target == s.panel.y);
  CHECK(p.regimes == s.panel.regime);

  const auto path = std::filesystem::temp_directory_path() / "gridattn_synth_test.csv";
  write_file_atomic(path, panel_csv(s));
  const TimePanel back = read_panel_file(path);
  CHECK(back.node_ids == p.node_ids);
  CHECK(back.channel_names == p.channel_names);
  CHECK(back.target == p.target);
  CHECK(back.features == p.features);
  CHECK(back.regimes == p.regimes);
  std::filesystem::remove(path);
  CHECK(manifest_text(s.scenario).find("kind=ambiguous") != std::string::npos);
}

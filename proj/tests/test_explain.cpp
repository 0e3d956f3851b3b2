// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "eigen_oracle.hpp"
#include "gridattn/config.hpp"
#include "gridattn/error.hpp"
#include "gridattn/explain.hpp"
#include "gridattn/synthetic.hpp"

using namespace gridattn;
using namespace gridattn::testing;

namespace {

Matrix random_symmetric(std::size_t n, std::mt19937_64& rng) {
  Matrix a = random_matrix(n, n, rng);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i);
  return a;
}

// Settings of tools/configs/synthetic-gat.cfg.
RunConfig switching_gat() {
  return parse_run_config(
      "kind=gat\nn_layers=2\nhidden=32\nheads=1\nlr=0.003\nbatch_size=16\nwindow=step\nhistory=1\nnode_identity=true\n");
}

}  // namespace

TEST_CASE("jacobi agrees with Eigen") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng() % 9;
    const Matrix a = random_symmetric(n, rng);
    const SymmetricEigen e = jacobi_eigen(a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(to_eigen(a));
    for (std::size_t j = 0; j < n; ++j)
      CHECK(e.values[j] == doctest::Approx(ref.eigenvalues()(static_cast<Eigen::Index>(n - 1 - j))).epsilon(1e-9));
    CHECK(std::is_sorted(e.values.rbegin(), e.values.rend()));
    CHECK(max_diff(matmul(transpose(e.vectors), e.vectors), Eigen::MatrixXd::Identity(n, n)) <= 1e-9);
    // A V = V diag(values)
    const Matrix av = matmul(a, e.vectors);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(av(i, j) - e.values[j] * e.vectors(i, j)) <= 1e-9);
  }
}

TEST_CASE("jacobi on hand-solvable fixtures") {
  // [[2,1],[1,2]]: characteristic polynomial (2-l)^2 - 1 -> 3, 1.
  const SymmetricEigen e2 = jacobi_eigen(Matrix{{2, 1}, {1, 2}});
  CHECK(e2.values[0] == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(e2.values[1] == doctest::Approx(1.0).epsilon(1e-10));
  // diag block plus [[1,1],[1,1]]: eigenvalues 5, 2, 0.
  const SymmetricEigen e3 = jacobi_eigen(Matrix{{5, 0, 0}, {0, 1, 1}, {0, 1, 1}});
  CHECK(e3.values[0] == doctest::Approx(5.0).epsilon(1e-10));
  CHECK(e3.values[1] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(std::abs(e3.values[2]) <= 1e-10);
}

TEST_CASE("pca fixtures") {
  const Projection line = pca_project(Matrix{{1, 2}, {2, 4}, {3, 6}}, 1);
  CHECK(line.explained_ratio[0] == doctest::Approx(1.0));

  const Projection ax = pca_project(Matrix{{2, 0}, {-2, 0}, {0, 1}, {0, -1}}, 2);
  CHECK(ax.explained_ratio[0] == doctest::Approx(0.8));
  CHECK(std::abs(ax.components(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(ax.components(0, 1)) <= 1e-12);

  CHECK_THROWS_AS(pca_project(Matrix{{1, 2}, {3, 4}}, 3), ContractError);
  CHECK_THROWS_AS(pca_project(Matrix{{1, 2}}, 1), ContractError);
}

TEST_CASE("pca invariants") {
  std::mt19937_64 rng(6);
  const Matrix data = random_matrix(40, 5, rng);
  const Projection p = pca_project(data, 5);
  CHECK(max_diff(matmul(p.components, transpose(p.components)), Eigen::MatrixXd::Identity(5, 5)) <= 1e-9);
  double total = 0.0;
  for (std::size_t j = 0; j < 5; ++j) {
    total += p.explained_ratio[j];
    if (j > 0) CHECK(p.explained_ratio[j] <= p.explained_ratio[j - 1]);
  }
  CHECK(total <= 1.0 + 1e-12);

  // Full-rank reconstruction.
  Matrix back = matmul(p.coords, p.components);
  for (std::size_t r = 0; r < 40; ++r)
    for (std::size_t c = 0; c < 5; ++c) back(r, c) += p.mean[c];
  CHECK(max_abs_diff(back, data) <= 1e-8 * max_abs(data));

  // Duplicated records project to duplicated coordinates.
  Matrix twice(80, 5);
  for (std::size_t r = 0; r < 80; ++r)
    for (std::size_t c = 0; c < 5; ++c) twice(r, c) = data(r % 40, c);
  const Projection d = pca_project(twice, 2);
  const Projection s = pca_project(data, 2);
  for (std::size_t r = 0; r < 40; ++r)
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(d.coords(r, c) == doctest::Approx(d.coords(r + 40, c)).epsilon(1e-12));
      CHECK(std::abs(d.coords(r, c)) == doctest::Approx(std::abs(s.coords(r, c))).epsilon(1e-9));
    }

  // Reordering the records reorders the coordinates.
  Matrix rev(40, 5);
  for (std::size_t r = 0; r < 40; ++r)
    for (std::size_t c = 0; c < 5; ++c) rev(r, c) = data(39 - r, c);
  const Projection pr = pca_project(rev, 2);
  for (std::size_t r = 0; r < 40; ++r) CHECK(std::abs(pr.coords(r, 0)) == doctest::Approx(std::abs(s.coords(39 - r, 0))).epsilon(1e-9));
}

TEST_CASE("purity and k-means") {
  CHECK(purity({0, 0, 1, 1}, {1, 1, 2, 2}) == 1.0);
  CHECK(purity({0, 0, 0, 0}, {1, 1, 2, 2}) == 0.5);
  CHECK(purity({0, 0, 0, 1}, {1, 1, 2, 2}) == 0.75);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0, 0.3);
  Matrix pts(100, 2);
  std::vector<int> labels(100), random_labels(100);
  for (std::size_t r = 0; r < 100; ++r) {
    labels[r] = r < 50 ? 1 : 2;
    random_labels[r] = static_cast<int>(rng() % 2);
    pts(r, 0) = (r < 50 ? -10.0 : 10.0) + z(rng);
    pts(r, 1) = z(rng);
  }
  CHECK(cluster_purity(pts, labels, 2) == 1.0);
  const double chance = cluster_purity(pts, random_labels, 2);
  CHECK(chance >= 0.5);
  CHECK(chance <= 0.6);
  CHECK_THROWS_AS(kmeans(Matrix(1, 2), 2, 0), ContractError);

  const KMeansResult a = kmeans(pts, 2, 4), b = kmeans(pts, 2, 4);
  CHECK(a.assignment == b.assignment);
}

TEST_CASE("seasons") {
  CHECK(season_of(parse_timestamp("2024-01-15 00:00")) == 0);
  CHECK(season_of(parse_timestamp("2024-04-01 00:00")) == 1);
  CHECK(season_of(parse_timestamp("2024-08-31 23:30")) == 2);
  CHECK(season_of(parse_timestamp("2024-11-30 00:00")) == 3);
  CHECK(season_of(parse_timestamp("2024-12-01 00:00")) == 0);
}

TEST_CASE("attention traces") {
  const Scenario sc = generate_scenario(ScenarioKind::kExplicitSwitch, 5, 300, 3);
  const TimePanel p = to_time_panel(sc);
  RunConfig cfg = switching_gat();
  cfg.n_layers = 1;
  cfg.hidden = 4;
  cfg.train.max_epochs = 1;
  const WeightedGraph g(Matrix{{0, 1, 0, 0, 1}, {1, 0, 1, 0, 0}, {0, 1, 0, 1, 0}, {0, 0, 1, 0, 1}, {1, 0, 0, 1, 0}},
                        p.node_ids);
  const TrainedModel tm = train(p, cfg.make_model(g, p, 1), cfg.window_spec(p), cfg.train);
  const std::vector<std::size_t> windows{3, 4, 5, 10};
  const AttentionTrace tr = collect_attention_trace(tm, p, windows);
  CHECK(tr.records.size() == 4);
  CHECK(tr.layers() == 1);
  CHECK(tr.heads(0) == 1);
  CHECK(tr.windows(0, 0) == windows);
  for (std::size_t k = 0; k < 4; ++k) CHECK(tr.labels(0, 0)[k] == p.regimes[windows[k]]);
  const Mask nb = g.neighbor_mask(true);
  for (const auto& rec : tr.records)
    for (std::size_t v = 0; v < 5; ++v) {
      double s = 0.0;
      for (std::size_t u = 0; u < 5; ++u) {
        if (!nb(v, u)) CHECK(rec.alpha(v, u) == 0.0);
        s += rec.alpha(v, u);
      }
      CHECK(std::abs(s - 1.0) <= 1e-10);
    }
  const Matrix vec = tr.vectors(0, 0);
  CHECK(vec.rows() == 4);
  CHECK(vec.cols() == 25);

  const std::string csv = trace_csv(tr, nb);
  CHECK(csv.rfind("window,layer,head,src,dst,alpha\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == 1 + 4 * 15);

  RunConfig gcn = cfg;
  gcn.kind = LayerKind::kGcn;
  const TrainedModel plain = train(p, gcn.make_model(g, p, 1), gcn.window_spec(p), gcn.train);
  CHECK_THROWS_AS(collect_attention_trace(plain, p, windows), ContractError);
}

TEST_CASE("single coupling: attention is stable over time and unlike the coupling matrix") {
  const Scenario sc = generate_scenario(ScenarioKind::kSingle, 10, 2000, 7);
  const TimePanel p = to_time_panel(sc);
  const WeightedGraph g(WeightedGraph::complete(10).weights(), p.node_ids);
  std::vector<double> ratios;
  for (std::uint64_t seed : {1, 2, 3}) {
    RunConfig cfg = switching_gat();
    cfg.train.seed = seed;
    const TrainedModel tm = train(p, cfg.make_model(g, p, seed), cfg.window_spec(p), cfg.train);
    const AttentionTrace tr = collect_attention_trace(tm, p, test_windows(tm));
    const Matrix v = tr.vectors(tr.layers() - 1, 0);
    double sd = 0.0, magnitude = 0.0;
    Matrix mean(10, 10);
    for (std::size_t c = 0; c < v.cols(); ++c) {
      double mu = 0.0, var = 0.0;
      for (std::size_t r = 0; r < v.rows(); ++r) mu += v(r, c);
      mu /= static_cast<double>(v.rows());
      for (std::size_t r = 0; r < v.rows(); ++r) var += (v(r, c) - mu) * (v(r, c) - mu);
      sd += std::sqrt(var / static_cast<double>(v.rows()));
      magnitude += std::abs(mu);
      mean.values()[c] = mu;
    }
    ratios.push_back(sd / magnitude);
    MESSAGE("seed " << seed << ": mean per-entry sd / mean |alpha| = " << sd / magnitude);

    // Row-normalized mean attention against row-normalized A.
    double dist = 0.0;
    for (std::size_t i = 0; i < 10; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < 10; ++j) row += sc.scenario.a1(i, j);
      for (std::size_t j = 0; j < 10; ++j) dist += std::pow(mean(i, j) - sc.scenario.a1(i, j) / row, 2);
    }
    CHECK(std::sqrt(dist) > 0.1);
  }
  std::sort(ratios.begin(), ratios.end());
  CHECK(ratios[1] <= 0.2);
}

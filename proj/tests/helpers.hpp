// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "gridattn/graph.hpp"
#include "gridattn/matrix.hpp"

namespace gridattn::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = u(rng);
  return m;
}

/// Random spanning path plus extra edges with probability p; weights in
/// [0.5, 1.5]. Always connected.
inline WeightedGraph random_graph(std::size_t n, std::mt19937_64& rng, double p = 0.4) {
  std::uniform_real_distribution<double> w(0.5, 1.5), coin(0.0, 1.0);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  Matrix a(n, n);
  for (std::size_t i = 1; i < n; ++i) {
    const double x = w(rng);
    a(order[i - 1], order[i]) = a(order[i], order[i - 1]) = x;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (a(i, j) == 0.0 && coin(rng) < p) a(i, j) = a(j, i) = w(rng);
  return WeightedGraph(a);
}

}  // namespace gridattn::testing

#include <functional>

#include "gridattn/panel.hpp"

namespace gridattn::testing {

/// Half-hourly panel from 2024-01-01 00:00 with load = f(node, step) as its
/// only channel.
inline TimePanel calendar_panel(std::size_t n, std::size_t steps, const std::function<double(std::size_t, std::size_t)>& f,
                                std::int64_t first = parse_timestamp("2024-01-01 00:00")) {
  TimePanel p;
  for (std::size_t i = 0; i < n; ++i) p.node_ids.push_back("n" + std::to_string(i));
  p.channel_names = {"load"};
  p.target = Matrix(n, steps);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < steps; ++t) p.target(i, t) = f(i, t);
  p.features = {p.target};
  for (std::size_t t = 0; t < steps; ++t) p.times.push_back(first + static_cast<std::int64_t>(t) * kHalfHourMinutes);
  p.validate();
  return p;
}

}  // namespace gridattn::testing

// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "gridattn/matrix.hpp"
#include "gridattn/panel.hpp"

namespace gridattn {

enum class ScenarioKind { kSingle, kExplicitSwitch, kAmbiguousSwitch };

std::string_view scenario_kind_name(ScenarioKind k);
/// Accepts single, explicit, ambiguous (and the *_switch spellings).
ScenarioKind parse_scenario_kind(std::string_view name);

struct ScenarioOptions {
  double density = 0.3;
  double noise_sd = 0.5;
  double period = 200.0;
  double weight_lo = 0.5;
  double weight_hi = 1.5;
};

struct CouplingScenario {
  ScenarioKind kind = ScenarioKind::kSingle;
  std::size_t nodes = 10;
  std::size_t steps = 2000;
  std::uint64_t seed = 0;
  ScenarioOptions options;
  Matrix a1;
  Matrix a2;  // empty for kSingle
};

struct SyntheticPanel {
  Matrix x;               // N x T raw signals
  Matrix y;               // N x T coupled targets
  std::vector<int> regime;  // 1 or 2 per step
  Matrix exogenous;       // e x T bits; e = 0, 1 or 2
};

/// Sparse full-rank coupling matrix: support drawn with probability
/// `density` per entry, weights U(lo, hi), redrawn until rank n.
Matrix random_coupling(std::size_t n, const ScenarioOptions& opts, std::mt19937_64& rng);

/// Y(:, t) = A X(:, t) for every column.
Matrix apply_coupling(const Matrix& a, const Matrix& x);

struct Scenario {
  CouplingScenario scenario;
  SyntheticPanel panel;
};

Scenario generate_scenario(ScenarioKind kind, std::size_t nodes, std::size_t steps, std::uint64_t seed,
                           const ScenarioOptions& opts = {});

/// Channels: x, then one per exogenous bit (repeated on every node).
/// Target: y. Times are step indices; regimes carried along.
TimePanel to_time_panel(const Scenario& s);

/// `t,node_id,x,y,regime[,exo1[,exo2]]`
std::string panel_csv(const Scenario& s);
std::string manifest_text(const CouplingScenario& s);
std::string coupling_csv(const Matrix& a);

/// Reads a panel CSV back as a TimePanel (node ids as written).
TimePanel read_synthetic_csv(const std::filesystem::path& path);

/// True when the header looks like the synthetic panel schema.
bool is_synthetic_header(const std::vector<std::string>& header);

/// Reads either a synthetic panel or a load CSV, chosen by the header.
TimePanel read_panel_file(const std::filesystem::path& path);

}  // namespace gridattn

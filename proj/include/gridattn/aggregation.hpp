// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gridattn/panel.hpp"

namespace gridattn {

/// K expert forecasts over the same blocks, nodes and slots with identical
/// truths. One block is one aggregation round.
struct ExpertPanel {
  std::vector<std::string> experts;
  std::vector<ForecastResult> forecasts;

  std::size_t size() const { return forecasts.size(); }
  std::size_t rounds() const { return forecasts.empty() ? 0 : forecasts.front().blocks(); }
  /// Throws ContractError on misalignment or non-finite values.
  void validate() const;
};

ExpertPanel make_expert_panel(std::vector<std::string> experts, std::vector<ForecastResult> forecasts);

/// Every `*.csv` forecast file in `dir`, in file-name order; the expert name
/// is the file stem.
ExpertPanel read_expert_dir(const std::filesystem::path& dir);

struct WeightTrajectory {
  std::vector<std::string> experts;
  std::vector<std::string> labels;           // one per round
  std::vector<std::vector<double>> weights;  // rounds x K, each on the simplex
  std::vector<double> regret;                // cumulative regret after the last round
  std::vector<double> squared_regret;        // sum of squared instantaneous regrets
};

/// `date,expert,weight`.
std::string weights_csv(const WeightTrajectory& w);

/// Polynomially weighted average with per-expert adaptive rates on plain
/// loss regrets: p_j proportional to eta_j * max(R_j, 0), where R_j sums
/// (aggregate loss - expert loss) and eta_j = 1 / (1 + sum of squared
/// instantaneous regrets). Uniform before the first update and whenever no
/// regret is positive.
class MlPoly {
 public:
  explicit MlPoly(std::size_t experts);

  std::size_t experts() const { return regret_.size(); }
  /// Weights for the coming round; depends only on past updates.
  std::vector<double> weights() const;
  void update(const std::vector<double>& expert_losses, double aggregate_loss);

  const std::vector<double>& regret() const { return regret_; }
  const std::vector<double>& squared_regret() const { return squared_; }

 private:
  std::vector<double> regret_;
  std::vector<double> squared_;
};

struct AggregateResult {
  ForecastResult forecast;
  WeightTrajectory weights;
};

/// Mean over experts per (block, node, slot).
AggregateResult uniform_aggregate(const ExpertPanel& panel);

/// One ML-Poly round per block; the round loss is the node-summed squared
/// error over the block, in the units of the forecasts.
AggregateResult mlpoly_aggregate(const ExpertPanel& panel);

enum class AggregationRule { kUniform, kMlPoly };
enum class HierarchyLevel { kBottom, kTop };

AggregationRule parse_aggregation_rule(std::string_view name);
HierarchyLevel parse_hierarchy_level(std::string_view name);

inline const std::string kNationalId = "NATIONAL";

struct HierarchicalResult {
  ForecastResult national;                      // single node kNationalId
  std::vector<std::string> weight_scopes;       // node ids (bottom) or kNationalId (top)
  std::vector<WeightTrajectory> weights;
};

/// bottom: aggregate each node on its own, then sum the nodes.
/// top: sum every expert over the nodes, then aggregate the national series.
HierarchicalResult hierarchical_aggregate(const ExpertPanel& panel, HierarchyLevel level, AggregationRule rule);

/// Sums the nodes of every block into one national row.
ForecastResult national_total(const ForecastResult& r);

}  // namespace gridattn

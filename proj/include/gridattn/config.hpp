// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gridattn/forecasting.hpp"
#include "gridattn/layers.hpp"

namespace gridattn {

inline constexpr std::string_view kVersion = "0.1.0";

/// One row of the published hyperparameter table.
struct Preset {
  std::string name;          // fr-gcn, uk-appnp, ...
  LayerKind kind;
  std::string table_graph;   // graph structure as published
  std::string graph;         // space, dtw, correlation or precision
  std::size_t batch_size;
  std::size_t n_layers;
  std::size_t hidden;
  double lr;
  std::size_t heads;
  std::size_t hops;
  double teleport;

  /// True when the published graph structure has no construction here and
  /// `graph` is a stand-in.
  bool remapped() const { return table_graph != graph; }
};

const std::vector<Preset>& presets();
/// Throws ContractError listing the known names.
const Preset& find_preset(std::string_view name);

/// Everything `train` needs besides the data and graph files. Read from
/// `key=value` lines; unknown keys are rejected.
struct RunConfig {
  std::string preset;          // empty: explicit settings only
  std::string model = "gnn";   // gnn or ff
  LayerKind kind = LayerKind::kGcn;
  std::size_t n_layers = 1;
  std::size_t hidden = 64;
  std::size_t heads = 1;
  std::size_t hops = 1;
  double teleport = 0.1;
  bool gcn_self_loops = true;
  bool appnp_sigma = false;
  std::vector<std::size_t> ff_hidden = {128, 128};
  std::string graph = "file";  // source recorded by the preset or "complete"
  std::string window = "auto"; // auto, daily or step
  std::size_t history = 1;     // input steps of step windows
  TrainConfig train;

  /// Sets one key; throws ContractError for unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  /// Copies the preset's table values (and remembers its name).
  void apply_preset(const Preset& p);
  /// Fully resolved `key=value` lines in a fixed order.
  std::string to_text() const;

  WindowSpec window_spec(const TimePanel& panel) const;
  StackOptions stack_options(const TimePanel& panel) const;
  ForecastModel make_model(const WeightedGraph& g, const TimePanel& panel, std::uint64_t seed) const;
};

/// Keys that manifests add next to the configuration (tool, command,
/// path.*, result.*). The config parser skips them, so a manifest can be fed back
/// as a config.
bool is_manifest_key(std::string_view key);

/// Parses `key=value` lines ('#' starts a comment). A `preset` key is
/// applied first so the other lines override it.
RunConfig parse_run_config(std::string_view text);

}  // namespace gridattn

// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridattn/config.hpp"

#include <charconv>
#include <sstream>
#include <utility>

#include "gridattn/csv.hpp"
#include "gridattn/error.hpp"

namespace gridattn {

const std::vector<Preset>& presets() {
  static const std::vector<Preset> table = {
      {"fr-gcn", LayerKind::kGcn, "space", "space", 16, 1, 170, 3e-3, 1, 1, 0.1},
      {"fr-sage", LayerKind::kSage, "correlation", "correlation", 16, 2, 401, 4e-4, 1, 1, 0.1},
      {"fr-gat", LayerKind::kGat, "GL3SR", "space", 16, 3, 364, 1e-3, 2, 1, 0.1},
      {"fr-gatv2", LayerKind::kGatV2, "space", "space", 16, 2, 359, 4e-4, 2, 1, 0.1},
      {"fr-transformer", LayerKind::kTransformer, "DistSplines", "space", 16, 1, 335, 3e-3, 2, 1, 0.1},
      {"fr-tag", LayerKind::kTag, "dtw", "dtw", 16, 3, 329, 3e-4, 1, 1, 0.1},
      {"fr-cheb", LayerKind::kCheb, "DistSplines", "space", 16, 1, 249, 6e-4, 1, 3, 0.1},
      {"fr-appnp", LayerKind::kAppnp, "space", "space", 16, 1, 106, 2e-3, 1, 1, 0.93},
      {"uk-gcn", LayerKind::kGcn, "correlation", "correlation", 128, 1, 96, 5e-3, 1, 1, 0.1},
      {"uk-sage", LayerKind::kSage, "correlation", "correlation", 32, 5, 207, 7e-4, 1, 1, 0.1},
      {"uk-gat", LayerKind::kGat, "correlation", "correlation", 16, 1, 172, 3e-3, 1, 1, 0.1},
      {"uk-gatv2", LayerKind::kGatV2, "precision", "precision", 128, 3, 71, 2e-3, 1, 1, 0.1},
      {"uk-transformer", LayerKind::kTransformer, "correlation", "correlation", 32, 5, 354, 4e-4, 1, 1, 0.1},
      {"uk-tag", LayerKind::kTag, "dtw", "dtw", 64, 1, 70, 3e-3, 1, 4, 0.1},
      {"uk-cheb", LayerKind::kCheb, "correlation", "correlation", 32, 4, 118, 6e-2, 1, 10, 0.1},
      {"uk-appnp", LayerKind::kAppnp, "precision", "precision", 64, 3, 454, 2e-2, 1, 8, 0.85},
  };
  return table;
}

const Preset& find_preset(std::string_view name) {
  std::string known;
  for (const auto& p : presets()) {
    if (p.name == name) return p;
    known += (known.empty() ? "" : ", ") + p.name;
  }
  throw ContractError("cli::config: unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

namespace {

const std::string kCtx = "cli::config";

std::size_t to_size(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ContractError(kCtx + ": " + std::string(key) + " needs a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ContractError(kCtx + ": " + std::string(key) + " needs true or false, got '" + std::string(v) + "'");
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  if (key == "preset") {
    apply_preset(find_preset(v));
  } else if (key == "model") {
    if (v != "gnn" && v != "ff") throw ContractError(kCtx + ": model must be gnn or ff, got '" + v + "'");
    model = v;
  } else if (key == "kind") {
    kind = parse_layer_kind(v);
  } else if (key == "n_layers") {
    n_layers = to_size(key, v);
  } else if (key == "hidden") {
    hidden = to_size(key, v);
  } else if (key == "heads") {
    heads = to_size(key, v);
  } else if (key == "hops" || key == "K") {
    hops = to_size(key, v);
  } else if (key == "teleport" || key == "alpha") {
    teleport = parse_double(v, kCtx);
  } else if (key == "gcn_self_loops") {
    gcn_self_loops = to_bool(key, v);
  } else if (key == "appnp_sigma") {
    appnp_sigma = to_bool(key, v);
  } else if (key == "ff_hidden") {
    ff_hidden.clear();
    std::stringstream ss(v);
    for (std::string part; std::getline(ss, part, ',');) ff_hidden.push_back(to_size(key, trim(part)));
    if (ff_hidden.empty()) throw ContractError(kCtx + ": ff_hidden needs at least one width");
  } else if (key == "graph") {
    graph = v;
  } else if (key == "window") {
    if (v != "auto" && v != "daily" && v != "step") throw ContractError(kCtx + ": window must be auto, daily or step");
    window = v;
  } else if (key == "history") {
    history = to_size(key, v);
  } else if (key == "batch_size") {
    train.batch_size = to_size(key, v);
  } else if (key == "max_epochs") {
    train.max_epochs = to_size(key, v);
  } else if (key == "patience") {
    train.patience = to_size(key, v);
  } else if (key == "lr") {
    train.lr = parse_double(v, kCtx);
  } else if (key == "seed") {
    train.seed = to_size(key, v);
  } else if (key == "train_fraction") {
    train.train_fraction = parse_double(v, kCtx);
  } else if (key == "val_fraction") {
    train.val_fraction = parse_double(v, kCtx);
  } else if (key == "test_fraction") {
    train.test_fraction = parse_double(v, kCtx);
  } else if (key == "node_identity") {
    train.node_identity = to_bool(key, v);
  } else {
    throw ContractError(kCtx + ": unknown key '" + std::string(key) + "'");
  }
}

void RunConfig::apply_preset(const Preset& p) {
  preset = p.name;
  model = "gnn";
  kind = p.kind;
  n_layers = p.n_layers;
  hidden = p.hidden;
  heads = p.heads;
  hops = p.hops;
  teleport = p.teleport;
  graph = p.graph;
  train.batch_size = p.batch_size;
  train.lr = p.lr;
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << "preset=" << preset << '\n'
     << "model=" << model << '\n'
     << "kind=" << layer_kind_name(kind) << '\n'
     << "n_layers=" << n_layers << '\n'
     << "hidden=" << hidden << '\n'
     << "heads=" << heads << '\n'
     << "hops=" << hops << '\n'
     << "teleport=" << format_double(teleport) << '\n'
     << "gcn_self_loops=" << (gcn_self_loops ? "true" : "false") << '\n'
     << "appnp_sigma=" << (appnp_sigma ? "true" : "false") << '\n'
     << "ff_hidden=" << join_sizes(ff_hidden) << '\n'
     << "graph=" << graph << '\n'
     << "window=" << window << '\n'
     << "history=" << history << '\n'
     << "batch_size=" << train.batch_size << '\n'
     << "max_epochs=" << train.max_epochs << '\n'
     << "patience=" << train.patience << '\n'
     << "lr=" << format_double(train.lr) << '\n'
     << "seed=" << train.seed << '\n'
     << "train_fraction=" << format_double(train.train_fraction) << '\n'
     << "val_fraction=" << format_double(train.val_fraction) << '\n'
     << "test_fraction=" << format_double(train.test_fraction) << '\n'
     << "node_identity=" << (train.node_identity ? "true" : "false") << '\n';
  return os.str();
}

WindowSpec RunConfig::window_spec(const TimePanel& panel) const {
  const bool daily = window == "daily" || (window == "auto" && panel.calendar);
  if (daily) return WindowSpec::daily();
  if (history == 0) throw ContractError(kCtx + ": history must be >= 1");
  return WindowSpec::per_step(history);
}

StackOptions RunConfig::stack_options(const TimePanel& panel) const {
  StackOptions o;
  o.kind = kind;
  o.input_dim = window_spec(panel).input_width(train.channels(panel));
  o.hidden = hidden;
  o.n_layers = n_layers;
  o.heads = heads;
  o.hops = hops;
  o.teleport = teleport;
  o.horizon = window_spec(panel).horizon;
  o.gcn_self_loops = gcn_self_loops;
  o.appnp_sigma = appnp_sigma;
  return o;
}

ForecastModel RunConfig::make_model(const WeightedGraph& g, const TimePanel& panel, std::uint64_t seed) const {
  const WindowSpec w = window_spec(panel);
  if (model == "ff") {
    return ForecastModel::make_feedforward({panel.nodes(), w.input_width(train.channels(panel)), w.horizon, ff_hidden}, seed);
  }
  return ForecastModel::make_gnn(g, make_stack(stack_options(panel)), seed);
}

bool is_manifest_key(std::string_view key) {
  return key == "tool" || key == "command" || key.starts_with("path.") || key.starts_with("result.");
}

RunConfig parse_run_config(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ContractError(kCtx + ": line " + std::to_string(line_no) + " is not key=value");
    entries.emplace_back(trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)));
  }
  RunConfig c;
  for (const auto& [k, v] : entries)
    if (k == "preset" && !v.empty()) c.set(k, v);
  for (const auto& [k, v] : entries)
    if (k != "preset" && !is_manifest_key(k)) c.set(k, v);
  return c;
}

}  // namespace gridattn

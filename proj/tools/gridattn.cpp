// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Every subcommand reads files, writes files
// atomically and echoes its resolved settings to a manifest.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridattn/aggregation.hpp"
#include "gridattn/baselines.hpp"
#include "gridattn/config.hpp"
#include "gridattn/csv.hpp"
#include "gridattn/error.hpp"
#include "gridattn/explain.hpp"
#include "gridattn/forecasting.hpp"
#include "gridattn/graph_inference.hpp"
#include "gridattn/metrics.hpp"
#include "gridattn/panel.hpp"
#include "gridattn/synthetic.hpp"

namespace fs = std::filesystem;
using namespace gridattn;

namespace {

// Ordered key=value lines; the first two are always tool and command.
class Manifest {
 public:
  explicit Manifest(std::string command) {
    add("tool", "gridattn " + std::string(kVersion));
    add("command", std::move(command));
  }
  void add(const std::string& key, const std::string& value) { text_ += key + "=" + value + "\n"; }
  void append(const std::string& lines) { text_ += lines; }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

fs::path manifest_for_file(const fs::path& out) { return fs::path(out.string() + ".manifest"); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ContractError("cli::run: cannot create directory " + dir.string() + ": " + ec.message());
}

std::string read_text(const fs::path& path, const std::string& ctx) {
  std::ifstream in(path);
  if (!in) throw ContractError(ctx + ": cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<GeoPoint> read_coords(const fs::path& path, const std::vector<std::string>& order, std::vector<std::string>& ids) {
  const std::string ctx = "graph_inference::read_coords";
  CsvTable t = read_csv(path, ctx);
  const std::size_t nc = t.column("node_id", ctx), lat = t.column("lat", ctx), lon = t.column("lon", ctx);
  std::map<std::string, GeoPoint> by_id;
  std::vector<std::string> file_order;
  for (const auto& r : t.rows) {
    if (!by_id.emplace(r[nc], GeoPoint{parse_double(r[lat], ctx), parse_double(r[lon], ctx)}).second) {
      throw ContractError(ctx + ": duplicate node " + r[nc] + " in " + path.string());
    }
    file_order.push_back(r[nc]);
  }
  ids = order.empty() ? file_order : order;
  std::vector<GeoPoint> out;
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ContractError(ctx + ": node " + id + " has no coordinates in " + path.string());
    out.push_back(it->second);
  }
  return out;
}

// "FIRST:LAST" as dates (calendar panels) or step indices; a single value
// means one day/step.
std::pair<std::int64_t, std::int64_t> parse_range(const std::string& text, const TimePanel& panel) {
  const auto colon = text.find(':');
  const std::string a = text.substr(0, colon), b = colon == std::string::npos ? a : text.substr(colon + 1);
  auto one = [&](const std::string& s) { return panel.calendar ? parse_date(s) : parse_int(s, "cli::days"); };
  return {one(a), one(b)};
}

struct Options {
  // gen-synthetic
  std::string kind = "explicit";
  std::size_t n = 10, t = 2000;
  std::uint64_t seed = 7;
  bool seed_given = false;
  double density = 0.3, noise = 0.5, period = 200.0;
  std::string out_dir, out;
  // infer-graph
  std::string method, in, coords;
  std::size_t radius = 1;
  double ridge = 1e-3;
  // train / predict / explain
  std::string data, graph, preset, config, model, days;
  std::vector<std::string> sets;
  // evaluate
  std::string forecast, truth;
  // aggregate
  std::string experts, rule = "uniform", level = "node";
  // explain
  std::size_t clusters = 2;
  std::string windows = "all";
};

int gen_synthetic(const Options& o) {
  ScenarioOptions so;
  so.density = o.density;
  so.noise_sd = o.noise;
  so.period = o.period;
  const Scenario s = generate_scenario(parse_scenario_kind(o.kind), o.n, o.t, o.seed, so);
  const fs::path dir(o.out_dir);
  ensure_dir(dir);
  write_file_atomic(dir / "panel.csv", panel_csv(s));
  write_file_atomic(dir / "A1.csv", coupling_csv(s.scenario.a1));
  if (!s.scenario.a2.empty()) write_file_atomic(dir / "A2.csv", coupling_csv(s.scenario.a2));
  Manifest m("gen-synthetic");
  m.append(manifest_text(s.scenario));
  write_file_atomic(dir / "manifest.txt", m.text());
  return 0;
}

int infer_graph(const Options& o) {
  Manifest m("infer-graph");
  m.add("method", o.method);
  WeightedGraph g;
  if (o.method == "space") {
    if (o.coords.empty()) throw ContractError("graph_inference::space: --coords is required");
    std::vector<std::string> order, ids;
    if (!o.in.empty()) order = read_panel_file(o.in).node_ids;
    const auto pts = read_coords(o.coords, order, ids);
    g = similarity_to_graph(geodesic_kernel_matrix(pts), ids);
    m.add("path.coords", o.coords);
  } else {
    if (o.in.empty()) throw ContractError("graph_inference::" + o.method + ": --in is required");
    const TimePanel p = read_panel_file(o.in);
    if (o.method == "dtw") {
      g = similarity_to_graph(dtw_matrix(p.target, o.radius), p.node_ids);
      m.add("radius", std::to_string(o.radius));
    } else if (o.method == "correlation") {
      g = similarity_to_graph(correlation_matrix(p.target), p.node_ids);
    } else if (o.method == "precision") {
      g = similarity_to_graph(precision_matrix(p.target, o.ridge), p.node_ids);
      m.add("ridge", format_double(o.ridge));
    } else {
      throw ContractError("graph_inference::infer: unknown method '" + o.method + "' (space, dtw, correlation, precision)");
    }
  }
  if (!o.in.empty()) m.add("path.in", o.in);
  m.add("path.out", o.out);
  m.add("result.edges", std::to_string(g.edge_count()));
  write_file_atomic(o.out, edge_list_csv(g));
  write_file_atomic(manifest_for_file(o.out), m.text());
  return 0;
}

RunConfig resolve_config(const Options& o) {
  std::string text = o.config.empty() ? std::string() : read_text(o.config, "cli::config");
  if (!o.preset.empty()) text = "preset=" + o.preset + "\n" + text;
  RunConfig cfg = parse_run_config(text);
  if (!cfg.preset.empty()) {
    const Preset& p = find_preset(cfg.preset);
    if (p.remapped()) {
      std::cerr << "warning: preset " << p.name << " uses the graph structure " << p.table_graph
                << ", which has no construction here; using a " << p.graph << " graph instead\n";
    }
  }
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ContractError("cli::config: --set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed_given) cfg.train.seed = o.seed;
  return cfg;
}

WeightedGraph load_graph(const Options& o, const RunConfig& cfg, const TimePanel& panel) {
  if (!o.graph.empty()) return read_edge_list(o.graph).reordered(panel.node_ids);
  if (cfg.graph == "complete") return WeightedGraph(WeightedGraph::complete(panel.nodes(), 1.0).weights(), panel.node_ids);
  throw ContractError("cli::train: --graph is required (config expects a '" + cfg.graph + "' graph; build it with infer-graph)");
}

int train_cmd(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  const TimePanel panel = read_panel_file(o.data);
  WeightedGraph g;
  if (cfg.model == "gnn") g = load_graph(o, cfg, panel);
  const TrainedModel trained = train(panel, cfg.make_model(g, panel, cfg.train.seed), cfg.window_spec(panel), cfg.train);
  const ForecastResult test = predict(trained, panel, test_windows(trained));
  const fs::path dir(o.out_dir);
  ensure_dir(dir);
  write_file_atomic(dir / "model.json", model_json(trained));
  write_file_atomic(dir / "history.csv", history_csv(trained.history));
  write_file_atomic(dir / "forecast.csv", forecast_csv(test));
  Manifest m("train");
  m.append(cfg.to_text());
  m.add("path.data", o.data);
  if (!o.graph.empty()) m.add("path.graph", o.graph);
  m.add("result.best_epoch", std::to_string(trained.history.best_epoch));
  m.add("result.best_val", format_double(trained.history.best_val));
  write_file_atomic(dir / "manifest.txt", m.text());
  std::cout << "epochs " << trained.history.epochs.size() - 1 << ", best epoch " << trained.history.best_epoch
            << ", validation loss " << format_double(trained.history.best_val) << "\n";
  return 0;
}

std::vector<std::size_t> select_windows(const std::string& days, const TrainedModel& trained, const TimePanel& panel) {
  if (days.empty() || days == "test") return test_windows(trained);
  if (days == "all") {
    std::vector<std::size_t> all(make_windows(panel, trained.window).size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  const auto [first, last] = parse_range(days, panel);
  return windows_in_range(panel, trained.window, first, last);
}

int predict_cmd(const Options& o) {
  const TrainedModel trained = load_model(o.model);
  const TimePanel panel = read_panel_file(o.data);
  const ForecastResult r = predict(trained, panel, select_windows(o.days, trained, panel));
  write_file_atomic(o.out, forecast_csv(r));
  Manifest m("predict");
  m.add("days", o.days.empty() ? "test" : o.days);
  m.add("path.model", o.model);
  m.add("path.data", o.data);
  write_file_atomic(manifest_for_file(o.out), m.text());
  return 0;
}

int evaluate_cmd(const Options& o) {
  ForecastResult r = read_forecast_csv(o.forecast);
  if (!o.truth.empty()) attach_truth(r, read_panel_file(o.truth));
  const MetricReport rep = evaluate_forecast(r);
  write_file_atomic(o.out, report_csv(rep));
  Manifest m("evaluate");
  m.add("path.forecast", o.forecast);
  if (!o.truth.empty()) m.add("path.truth", o.truth);
  write_file_atomic(manifest_for_file(o.out), m.text());
  std::cout << "MAPE " << format_double(rep.mape_percent) << " %, RMSE " << format_double(rep.rmse) << "\n";
  return 0;
}

int baseline_cmd(const Options& o) {
  const TimePanel panel = read_panel_file(o.data);
  Manifest m("baseline");
  m.add("kind", o.kind);
  ForecastResult r;
  if (o.kind == "persist1" || o.kind == "persist7") {
    const int lag = o.kind == "persist1" ? 1 : 7;
    std::int64_t first = panel.times.front(), last = panel.times.back();
    if (!o.days.empty()) std::tie(first, last) = parse_range(o.days, panel);
    std::vector<std::int64_t> days = forecast_days(panel, first, last);
    // Without an explicit range, skip the days that lack enough history.
    if (o.days.empty()) {
      const auto per_day = static_cast<std::int64_t>(steps_per_day(panel)) * panel.step;
      std::erase_if(days, [&](std::int64_t d) { return d - lag * per_day < panel.times.front(); });
    }
    r = persistence_forecast(panel, lag, days);
    m.add("days", o.days.empty() ? "all" : o.days);
  } else if (o.kind == "ff") {
    RunConfig cfg = resolve_config(o);
    cfg.model = "ff";
    const WindowSpec w = cfg.window_spec(panel);
    const FeedForwardRun run = feedforward_train_predict(panel, w, cfg.train, cfg.ff_hidden);
    r = o.days.empty() || o.days == "test" ? run.forecast : predict(run.model, panel, select_windows(o.days, run.model, panel));
    m.append(cfg.to_text());
    m.add("days", o.days.empty() ? "test" : o.days);
  } else {
    throw ContractError("baselines::run: unknown kind '" + o.kind + "' (persist1, persist7, ff)");
  }
  m.add("path.data", o.data);
  write_file_atomic(o.out, forecast_csv(r));
  write_file_atomic(manifest_for_file(o.out), m.text());
  return 0;
}

int aggregate_cmd(const Options& o) {
  const ExpertPanel panel = read_expert_dir(o.experts);
  const AggregationRule rule = parse_aggregation_rule(o.rule);
  const fs::path out(o.out);
  const std::string stem = (out.parent_path() / out.stem()).string();
  Manifest m("aggregate");
  m.add("rule", o.rule);
  m.add("level", o.level);
  std::string experts;
  for (const auto& e : panel.experts) experts += (experts.empty() ? "" : ",") + e;
  m.add("experts", experts);
  m.add("path.experts", o.experts);
  if (o.level == "node") {
    const AggregateResult a = rule == AggregationRule::kUniform ? uniform_aggregate(panel) : mlpoly_aggregate(panel);
    write_file_atomic(out, forecast_csv(a.forecast));
    write_file_atomic(stem + ".weights.csv", weights_csv(a.weights));
  } else {
    const HierarchicalResult h = hierarchical_aggregate(panel, parse_hierarchy_level(o.level), rule);
    write_file_atomic(out, forecast_csv(h.national));
    if (h.weights.size() == 1) {
      write_file_atomic(stem + ".weights.csv", weights_csv(h.weights.front()));
    } else {
      for (std::size_t i = 0; i < h.weights.size(); ++i)
        write_file_atomic(stem + ".weights." + h.weight_scopes[i] + ".csv", weights_csv(h.weights[i]));
    }
  }
  write_file_atomic(manifest_for_file(out), m.text());
  return 0;
}

int explain_cmd(const Options& o) {
  const TrainedModel trained = load_model(o.model);
  const TimePanel panel = read_panel_file(o.data);
  const std::vector<std::size_t> windows = select_windows(o.windows, trained, panel);
  const AttentionTrace trace = collect_attention_trace(trained, panel, windows);
  const fs::path dir(o.out_dir);
  ensure_dir(dir);
  write_file_atomic(dir / "trace.csv", trace_csv(trace, trained.model.ops.attention_mask()));
  std::ostringstream proj, purity;
  proj << "window,layer,head,pc1,pc2,label\n";
  purity << "layer,head,purity,explained_pc1,explained_pc2\n";
  for (std::size_t l = 0; l < trace.layers(); ++l)
    for (std::size_t h = 0; h < trace.heads(l); ++h) {
      const Projection p = pca_project(trace.vectors(l, h), 2);
      const std::vector<int> labels = trace.labels(l, h);
      std::string csv = projection_csv(p, trace.windows(l, h), l, h, labels, trace.label_names);
      proj << csv.substr(csv.find('\n') + 1);
      const double pu = cluster_purity(p.coords, labels, o.clusters);
      purity << l << ',' << h << ',' << format_double(pu) << ',' << format_double(p.explained_ratio[0]) << ','
             << format_double(p.explained_ratio[1]) << '\n';
      const std::string title = "layer " + std::to_string(l) + " head " + std::to_string(h);
      write_file_atomic(dir / ("scatter_l" + std::to_string(l) + "_h" + std::to_string(h) + ".svg"),
                        scatter_svg(p, labels, trace.label_names, title));
      std::cout << title << ": purity " << format_double(pu) << "\n";
    }
  write_file_atomic(dir / "projection.csv", proj.str());
  write_file_atomic(dir / "purity.csv", purity.str());
  Manifest m("explain");
  m.add("windows", o.windows);
  m.add("clusters", std::to_string(o.clusters));
  m.add("path.model", o.model);
  m.add("path.data", o.data);
  write_file_atomic(dir / "manifest.txt", m.text());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph neural networks for multi-node load forecasting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "gridattn " + std::string(kVersion));
  Options o;

  auto* gen = app.add_subcommand("gen-synthetic", "Generate a synthetic coupling scenario");
  gen->add_option("--kind", o.kind, "single, explicit or ambiguous")->capture_default_str();
  gen->add_option("--n", o.n, "Number of nodes")->capture_default_str();
  gen->add_option("--t", o.t, "Number of time steps")->capture_default_str();
  gen->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  gen->add_option("--density", o.density, "Coupling density")->capture_default_str();
  gen->add_option("--noise", o.noise, "Noise standard deviation")->capture_default_str();
  gen->add_option("--period", o.period, "Period of the seasonal component")->capture_default_str();
  gen->add_option("--out-dir", o.out_dir, "Output directory")->required();

  auto* infer = app.add_subcommand("infer-graph", "Build a graph from coordinates or load series");
  infer->add_option("--method", o.method, "space, dtw, correlation or precision")->required();
  infer->add_option("--in", o.in, "Load CSV or synthetic panel");
  infer->add_option("--coords", o.coords, "Coordinates CSV node_id,lat,lon");
  infer->add_option("--radius", o.radius, "FastDTW radius")->capture_default_str();
  infer->add_option("--ridge", o.ridge, "Precision ridge")->capture_default_str();
  infer->add_option("--out", o.out, "Edge-list CSV")->required();

  auto* tr = app.add_subcommand("train", "Train a model and forecast the test windows");
  tr->add_option("--data", o.data, "Load CSV or synthetic panel")->required();
  tr->add_option("--graph", o.graph, "Edge-list CSV");
  tr->add_option("--preset", o.preset, "Named preset (fr-gcn, ..., uk-appnp)");
  tr->add_option("--config", o.config, "key=value config file");
  tr->add_option("--set", o.sets, "Override one config key (key=value)");
  tr->add_option("--seed", o.seed, "Random seed")->each([&](const std::string&) { o.seed_given = true; });
  tr->add_option("--out-dir", o.out_dir, "Output directory")->required();

  auto* pr = app.add_subcommand("predict", "Forecast with a trained model");
  pr->add_option("--model", o.model, "model.json")->required();
  pr->add_option("--data", o.data, "Load CSV or synthetic panel")->required();
  pr->add_option("--days", o.days, "FIRST:LAST dates or steps, 'test' or 'all'");
  pr->add_option("--out", o.out, "Forecast CSV")->required();

  auto* ev = app.add_subcommand("evaluate", "MAPE and RMSE of a forecast");
  ev->add_option("--forecast", o.forecast, "Forecast CSV")->required();
  ev->add_option("--truth", o.truth, "Load CSV or panel with the truths (default: y_true column)");
  ev->add_option("--out", o.out, "Report CSV")->required();

  auto* bl = app.add_subcommand("baseline", "Persistence or per-node feedforward forecasts");
  bl->add_option("--kind", o.kind, "persist1, persist7 or ff")->required();
  bl->add_option("--data", o.data, "Load CSV or synthetic panel")->required();
  bl->add_option("--days", o.days, "FIRST:LAST dates or steps");
  bl->add_option("--config", o.config, "key=value config file (ff)");
  bl->add_option("--set", o.sets, "Override one config key (ff)");
  bl->add_option("--seed", o.seed, "Random seed (ff)")->each([&](const std::string&) { o.seed_given = true; });
  bl->add_option("--out", o.out, "Forecast CSV")->required();

  auto* ag = app.add_subcommand("aggregate", "Combine expert forecasts");
  ag->add_option("--experts", o.experts, "Directory of forecast CSVs")->required();
  ag->add_option("--rule", o.rule, "uniform or mlpoly")->capture_default_str();
  ag->add_option("--level", o.level, "node, bottom or top")->capture_default_str();
  ag->add_option("--out", o.out, "Forecast CSV")->required();

  auto* ex = app.add_subcommand("explain", "Attention trace, PCA projection and cluster purity");
  ex->add_option("--model", o.model, "model.json")->required();
  ex->add_option("--data", o.data, "Load CSV or synthetic panel")->required();
  ex->add_option("--windows", o.windows, "'all', 'test' or FIRST:LAST")->capture_default_str();
  ex->add_option("--clusters", o.clusters, "k-means clusters")->capture_default_str();
  ex->add_option("--out-dir", o.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) return gen_synthetic(o);
    if (*infer) return infer_graph(o);
    if (*tr) return train_cmd(o);
    if (*pr) return predict_cmd(o);
    if (*ev) return evaluate_cmd(o);
    if (*bl) return baseline_cmd(o);
    if (*ag) return aggregate_cmd(o);
    if (*ex) return explain_cmd(o);
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridattn/forecasting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "gridattn/adam.hpp"
#include "gridattn/csv.hpp"
#include "gridattn/error.hpp"

namespace gridattn {

using nlohmann::json;

ForecastModel ForecastModel::make_gnn(const WeightedGraph& g, ModelSpec spec, std::uint64_t seed) {
  ForecastModel m;
  m.family = ModelFamily::kGnn;
  m.gnn = GnnModel(std::move(spec), seed);
  const bool self_loops = m.gnn.spec().layers.empty() || m.gnn.spec().layers.front().gcn_self_loops;
  m.ops = GraphOperators(g, m.gnn.kinds(), self_loops);
  return m;
}

ForecastModel ForecastModel::make_feedforward(FeedForwardSpec spec, std::uint64_t seed) {
  ForecastModel m;
  m.family = ModelFamily::kFeedForward;
  m.ff = FeedForwardModel(std::move(spec), seed);
  return m;
}

std::vector<DiffTensor> ForecastModel::parameters() const {
  return family == ModelFamily::kGnn ? gnn.parameters() : ff.parameters();
}

std::vector<std::string> ForecastModel::parameter_names() const {
  return family == ModelFamily::kGnn ? gnn.parameter_names() : ff.parameter_names();
}

std::size_t ForecastModel::input_dim() const {
  return family == ModelFamily::kGnn ? gnn.spec().input_dim : ff.spec().input_dim;
}

std::size_t ForecastModel::horizon() const {
  return family == ModelFamily::kGnn ? gnn.spec().horizon : ff.spec().horizon;
}

std::size_t ForecastModel::nodes() const { return family == ModelFamily::kGnn ? ops.size() : ff.spec().nodes; }

DiffTensor ForecastModel::forward(Tape& tape, const DiffTensor& input, SnapshotSink* snapshots) const {
  return family == ModelFamily::kGnn ? gnn.forward(tape, input, ops, snapshots) : ff.forward(tape, input);
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ContractError("forecasting::train: batch_size must be positive");
  if (patience == 0) throw ContractError("forecasting::train: patience must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ContractError("forecasting::train: lr must be finite and >= 0");
  if (!(train_fraction > 0 && val_fraction > 0 && test_fraction > 0) ||
      std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
    throw ContractError("forecasting::train: split fractions must be positive and sum to 1");
  }
}

SplitPlan split_windows(std::size_t count, const TrainConfig& cfg) {
  const auto n_train = static_cast<std::size_t>(std::floor(cfg.train_fraction * static_cast<double>(count)));
  const auto n_val = static_cast<std::size_t>(std::floor(cfg.val_fraction * static_cast<double>(count)));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= count) {
    throw ContractError("forecasting::split: " + std::to_string(count) + " windows are too few for a train/val/test split");
  }
  return {n_train, n_train + n_val, count};
}

std::string history_csv(const TrainHistory& h) {
  std::ostringstream os;
  os << "epoch,train_loss,val_loss\n";
  for (const auto& e : h.epochs) os << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.val_loss) << '\n';
  return os.str();
}

namespace {

struct Batches {
  std::vector<Matrix> inputs;
  std::vector<Matrix> targets;
};

Batches materialize(const TimePanel& scaled, const std::vector<Window>& windows, const WindowSpec& spec) {
  Batches b;
  for (const auto& w : windows) {
    b.inputs.push_back(window_input(scaled, w, spec));
    b.targets.push_back(window_target(scaled, w, spec));
  }
  return b;
}

double mean_loss(const ForecastModel& model, const Batches& data, std::size_t begin, std::size_t end) {
  if (begin >= end) return 0.0;
  Tape tape;
  tape.set_recording(false);
  double total = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    DiffTensor pred = model.forward(tape, DiffTensor::constant(data.inputs[i]));
    total += mse_loss(pred.value(), data.targets[i]);
  }
  return total / static_cast<double>(end - begin);
}

void check_model_fits(const ForecastModel& model, const TimePanel& panel, const WindowSpec& window) {
  if (model.nodes() != panel.nodes()) {
    throw DimensionError("forecasting::train: model has " + std::to_string(model.nodes()) + " nodes, panel has " +
                         std::to_string(panel.nodes()));
  }
  if (model.input_dim() != window.input_width(panel.channels())) {
    throw DimensionError("forecasting::train: model input width " + std::to_string(model.input_dim()) +
                         ", windows provide " + std::to_string(window.input_width(panel.channels())));
  }
  if (model.horizon() != window.horizon) {
    throw DimensionError("forecasting::train: model horizon " + std::to_string(model.horizon()) + ", windows need " +
                         std::to_string(window.horizon));
  }
}

std::size_t window_end(const Window& w, const WindowSpec& spec) {
  return std::max(w.input_start + spec.input_len, w.target_start + spec.horizon);
}

}  // namespace

double evaluate_loss(const ForecastModel& model, const TimePanel& scaled, const std::vector<Window>& windows,
                     const WindowSpec& spec, std::size_t begin, std::size_t end) {
  if (end > windows.size() || begin > end) throw ContractError("forecasting::evaluate_loss: window range out of bounds");
  std::vector<Window> sub(windows.begin() + static_cast<std::ptrdiff_t>(begin), windows.begin() + static_cast<std::ptrdiff_t>(end));
  return mean_loss(model, materialize(scaled, sub, spec), 0, sub.size());
}

TrainedModel train(const TimePanel& raw, ForecastModel model, const WindowSpec& window, const TrainConfig& cfg) {
  cfg.validate();
  raw.validate();
  const TimePanel panel = cfg.node_identity ? with_node_identity(raw) : raw;
  check_model_fits(model, panel, window);
  const std::vector<Window> windows = make_windows(panel, window);
  const SplitPlan split = split_windows(windows.size(), cfg);

  TrainedModel out;
  out.window = window;
  out.split = split;
  out.config = cfg;
  out.node_ids = panel.node_ids;
  out.channel_names = panel.channel_names;
  out.scaler = fit_scaler(panel, windows.front().input_start, window_end(windows[split.train_end - 1], window));
  const Batches data = materialize(apply_scaler(panel, out.scaler), windows, window);

  std::vector<DiffTensor> params = model.parameters();
  AdamState adam(AdamOptions{cfg.lr, 0.9, 0.999, 1e-8}, params);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  TrainHistory& hist = out.history;
  hist.epochs.push_back({0, mean_loss(model, data, 0, split.train_end), mean_loss(model, data, split.train_end, split.val_end)});
  hist.best_val = hist.epochs.back().val_loss;
  hist.best_epoch = 0;
  auto snapshot = [&] {
    std::vector<Matrix> v;
    for (const auto& p : params) v.push_back(p.value());
    return v;
  };
  std::vector<Matrix> best = snapshot();

  std::vector<std::size_t> order(split.train_end);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0, batch = 0; start < order.size(); start += cfg.batch_size, ++batch) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      Tape tape;
      DiffTensor acc;
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        DiffTensor l = mse_loss(tape, model.forward(tape, DiffTensor::constant(data.inputs[i])), data.targets[i]);
        acc = acc.valid() ? tape.add(acc, l) : l;
      }
      DiffTensor loss = tape.scalar_mul(1.0 / static_cast<double>(stop - start), acc);
      const double value = loss.value()(0, 0);
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "forecasting::train: non-finite loss at epoch " << epoch << ", batch " << batch << " (lr " << cfg.lr << ")";
        throw OptimizationError(msg.str());
      }
      epoch_loss += value * static_cast<double>(stop - start);
      for (auto& p : params) p.zero_grad();
      tape.backward(loss);
      adam_step(adam, params);
    }
    const double val = mean_loss(model, data, split.train_end, split.val_end);
    hist.epochs.push_back({epoch, epoch_loss / static_cast<double>(order.size()), val});
    if (val < hist.best_val) {
      hist.best_val = val;
      hist.best_epoch = epoch;
      best = snapshot();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i].mutable_value() = best[i];
  out.model = std::move(model);
  return out;
}

ForecastResult predict(const TrainedModel& trained, const TimePanel& raw, const std::vector<std::size_t>& indices) {
  const TimePanel panel = trained.config.node_identity ? with_node_identity(raw) : raw;
  if (panel.node_ids != trained.node_ids) throw ContractError("forecasting::predict: panel nodes differ from the trained model");
  if (panel.channels() != trained.channel_names.size()) {
    throw DimensionError("forecasting::predict: panel has " + std::to_string(panel.channels()) + " channels, model expects " +
                         std::to_string(trained.channel_names.size()));
  }
  const std::vector<Window> windows = make_windows(panel, trained.window);
  const TimePanel scaled = apply_scaler(panel, trained.scaler);
  ForecastResult r;
  r.node_ids = panel.node_ids;
  const bool capture = trained.model.has_attention();
  Tape tape;
  tape.set_recording(false);
  for (std::size_t idx : indices) {
    if (idx >= windows.size()) throw ContractError("forecasting::predict: window " + std::to_string(idx) + " outside data");
    const Window& w = windows[idx];
    SnapshotSink sink;
    DiffTensor pred = trained.model.forward(tape, DiffTensor::constant(window_input(scaled, w, trained.window)),
                                            capture ? &sink : nullptr);
    tape.clear();
    const std::int64_t t0 = panel.times[w.target_start];
    r.labels.push_back(panel.calendar ? format_date(t0) : std::to_string(t0));
    r.starts.push_back(t0);
    r.predictions.push_back(invert_target(pred.value(), trained.scaler));
    r.truths.push_back(window_target(panel, w, trained.window));
    if (!panel.regimes.empty()) r.regimes.push_back(panel.regimes[w.target_start]);
    if (capture) r.attention.push_back(std::move(sink));
  }
  return r;
}

std::vector<std::size_t> windows_in_range(const TimePanel& panel, const WindowSpec& spec, std::int64_t first,
                                          std::int64_t last) {
  const std::vector<Window> windows = make_windows(panel, spec);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    std::int64_t t = panel.times[windows[i].target_start];
    if (panel.calendar) t -= ((t % 1440) + 1440) % 1440;
    if (t >= first && t <= last) out.push_back(i);
  }
  if (out.empty()) throw ContractError("forecasting::predict: requested range contains no forecastable window");
  return out;
}

std::vector<std::size_t> test_windows(const TrainedModel& trained) {
  std::vector<std::size_t> out;
  for (std::size_t i = trained.split.val_end; i < trained.split.count; ++i) out.push_back(i);
  return out;
}

std::vector<EnsembleMember> deep_ensemble(const TimePanel& panel, const std::function<ForecastModel(std::uint64_t)>& make,
                                          const WindowSpec& window, const TrainConfig& cfg,
                                          const std::vector<std::uint64_t>& seeds,
                                          const std::vector<std::size_t>& predict_windows) {
  if (seeds.empty()) throw ContractError("forecasting::deep_ensemble: need at least one member");
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  std::vector<EnsembleMember> out;
  for (std::uint64_t seed : sorted) {
    EnsembleMember m;
    m.seed = seed;
    try {
      TrainConfig c = cfg;
      c.seed = seed;
      m.model = train(panel, make(seed), window, c);
      m.forecast = predict(*m.model, panel, predict_windows.empty() ? test_windows(*m.model) : predict_windows);
    } catch (const std::exception& e) {
      m.model.reset();
      m.forecast.reset();
      m.error = e.what();
    }
    out.push_back(std::move(m));
  }
  return out;
}

namespace {

json matrix_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"values", std::vector<double>(m.values().begin(), m.values().end())}};
}

Matrix matrix_from(const json& j) {
  const auto rows = j.at("rows").get<std::size_t>(), cols = j.at("cols").get<std::size_t>();
  auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != rows * cols) throw ContractError("forecasting::load_model: matrix size mismatch");
  return Matrix(rows, cols, std::move(values));
}

}  // namespace

std::string model_json(const TrainedModel& t) {
  json j;
  j["format"] = "gridattn-model";
  j["version"] = 1;
  j["node_ids"] = t.node_ids;
  j["channels"] = t.channel_names;
  j["window"] = {{"input_len", t.window.input_len},
                 {"horizon", t.window.horizon},
                 {"stride", t.window.stride},
                 {"concurrent", t.window.concurrent},
                 {"day_aligned", t.window.day_aligned}};
  j["split"] = {{"train_end", t.split.train_end}, {"val_end", t.split.val_end}, {"count", t.split.count}};
  j["scaler"] = {{"channel_min", t.scaler.channel_min}, {"channel_max", t.scaler.channel_max},
                 {"channel_constant", t.scaler.channel_constant}, {"target_min", t.scaler.target_min},
                 {"target_max", t.scaler.target_max}, {"target_constant", t.scaler.target_constant}};
  j["best_epoch"] = t.history.best_epoch;
  j["config"] = {{"batch_size", t.config.batch_size}, {"max_epochs", t.config.max_epochs}, {"patience", t.config.patience},
                 {"lr", t.config.lr}, {"seed", t.config.seed}, {"train_fraction", t.config.train_fraction},
                 {"val_fraction", t.config.val_fraction}, {"test_fraction", t.config.test_fraction},
                 {"node_identity", t.config.node_identity}};
  const ForecastModel& m = t.model;
  if (m.family == ModelFamily::kGnn) {
    j["family"] = "gnn";
    json layers = json::array();
    for (const auto& c : m.gnn.spec().layers) {
      layers.push_back({{"kind", std::string(layer_kind_name(c.kind))}, {"in_dim", c.in_dim}, {"out_dim", c.out_dim},
                        {"heads", c.heads}, {"hops", c.hops}, {"teleport", c.teleport},
                        {"activation", c.activation == Activation::kRelu ? "relu" : "identity"},
                        {"concat_heads", c.concat_heads}, {"gcn_self_loops", c.gcn_self_loops},
                        {"appnp_sigma", c.appnp_sigma}});
    }
    j["architecture"] = {{"input_dim", m.gnn.spec().input_dim}, {"horizon", m.gnn.spec().horizon}, {"layers", layers}};
    j["graph"] = edge_list_csv(m.ops.graph());
  } else {
    j["family"] = "feedforward";
    j["architecture"] = {{"nodes", m.ff.spec().nodes}, {"input_dim", m.ff.spec().input_dim},
                         {"horizon", m.ff.spec().horizon}, {"hidden", m.ff.spec().hidden}};
  }
  json params = json::array();
  const auto names = m.parameter_names();
  const auto values = m.parameters();
  for (std::size_t i = 0; i < values.size(); ++i) {
    json p = matrix_json(values[i].value());
    p["name"] = names[i];
    params.push_back(std::move(p));
  }
  j["parameters"] = std::move(params);
  return j.dump(1) + "\n";
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("forecasting::load_model: cannot open " + path.string());
  TrainedModel t;
  try {
    const json j = json::parse(in);
    if (j.at("format") != "gridattn-model") throw ContractError("forecasting::load_model: not a model file: " + path.string());
    t.node_ids = j.at("node_ids").get<std::vector<std::string>>();
    t.channel_names = j.at("channels").get<std::vector<std::string>>();
    const auto& w = j.at("window");
    t.window = {w.at("input_len"), w.at("horizon"), w.at("stride"), w.at("concurrent"), w.at("day_aligned")};
    const auto& sp = j.at("split");
    t.split = {sp.at("train_end"), sp.at("val_end"), sp.at("count")};
    const auto& s = j.at("scaler");
    t.scaler.channel_min = s.at("channel_min").get<std::vector<double>>();
    t.scaler.channel_max = s.at("channel_max").get<std::vector<double>>();
    t.scaler.channel_constant = s.at("channel_constant").get<std::vector<bool>>();
    t.scaler.target_min = s.at("target_min").get<std::vector<double>>();
    t.scaler.target_max = s.at("target_max").get<std::vector<double>>();
    t.scaler.target_constant = s.at("target_constant").get<std::vector<bool>>();
    t.history.best_epoch = j.at("best_epoch");
    const auto& c = j.at("config");
    t.config.batch_size = c.at("batch_size");
    t.config.max_epochs = c.at("max_epochs");
    t.config.patience = c.at("patience");
    t.config.lr = c.at("lr");
    t.config.seed = c.at("seed");
    t.config.train_fraction = c.at("train_fraction");
    t.config.val_fraction = c.at("val_fraction");
    t.config.test_fraction = c.at("test_fraction");
    t.config.node_identity = c.at("node_identity");
    const auto& a = j.at("architecture");
    if (j.at("family") == "gnn") {
      ModelSpec spec;
      spec.input_dim = a.at("input_dim");
      spec.horizon = a.at("horizon");
      for (const auto& l : a.at("layers")) {
        LayerConfig c;
        c.kind = parse_layer_kind(l.at("kind").get<std::string>());
        c.in_dim = l.at("in_dim");
        c.out_dim = l.at("out_dim");
        c.heads = l.at("heads");
        c.hops = l.at("hops");
        c.teleport = l.at("teleport");
        c.activation = l.at("activation") == "relu" ? Activation::kRelu : Activation::kIdentity;
        c.concat_heads = l.at("concat_heads");
        c.gcn_self_loops = l.at("gcn_self_loops");
        c.appnp_sigma = l.at("appnp_sigma");
        spec.layers.push_back(c);
      }
      WeightedGraph g = graph_from_edge_list_text(j.at("graph").get<std::string>()).reordered(t.node_ids);
      t.model = ForecastModel::make_gnn(g, std::move(spec), 0);
    } else {
      FeedForwardSpec spec{a.at("nodes"), a.at("input_dim"), a.at("horizon"), a.at("hidden").get<std::vector<std::size_t>>()};
      t.model = ForecastModel::make_feedforward(std::move(spec), 0);
    }
    auto params = t.model.parameters();
    const auto& stored = j.at("parameters");
    if (stored.size() != params.size()) throw ContractError("forecasting::load_model: parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      Matrix m = matrix_from(stored[i]);
      if (!m.same_shape(params[i].value())) throw ContractError("forecasting::load_model: parameter shape mismatch");
      params[i].mutable_value() = std::move(m);
    }
  } catch (const json::exception& e) {
    throw ContractError("forecasting::load_model: malformed model file " + path.string() + ": " + e.what());
  }
  return t;
}

}  // namespace gridattn

// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gridattn/feedforward.hpp"
#include "gridattn/graph.hpp"
#include "gridattn/layers.hpp"
#include "gridattn/panel.hpp"

namespace gridattn {

enum class ModelFamily { kGnn, kFeedForward };

/// A trainable forecaster: a GNN stack over a fixed graph, or per-node
/// perceptrons.
struct ForecastModel {
  ModelFamily family = ModelFamily::kGnn;
  GnnModel gnn;
  GraphOperators ops;
  FeedForwardModel ff;

  static ForecastModel make_gnn(const WeightedGraph& g, ModelSpec spec, std::uint64_t seed);
  static ForecastModel make_feedforward(FeedForwardSpec spec, std::uint64_t seed);

  std::vector<DiffTensor> parameters() const;
  std::vector<std::string> parameter_names() const;
  bool has_attention() const { return family == ModelFamily::kGnn && gnn.has_attention(); }
  std::size_t input_dim() const;
  std::size_t horizon() const;
  std::size_t nodes() const;

  DiffTensor forward(Tape& tape, const DiffTensor& input, SnapshotSink* snapshots = nullptr) const;
};

struct TrainConfig {
  std::size_t batch_size = 16;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  double train_fraction = 0.70;
  double val_fraction = 0.15;
  double test_fraction = 0.15;
  bool node_identity = false;  // append with_node_identity channels

  void validate() const;
  /// Input channels the model sees for `panel`.
  std::size_t channels(const TimePanel& panel) const { return panel.channels() + (node_identity ? panel.nodes() : 0); }
};

/// Chronological split of window indices: [0, train) [train, val) [val, count).
struct SplitPlan {
  std::size_t train_end = 0;
  std::size_t val_end = 0;
  std::size_t count = 0;
};

SplitPlan split_windows(std::size_t count, const TrainConfig& cfg);

struct EpochLoss {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainHistory {
  std::vector<EpochLoss> epochs;  // epoch 0 is the untrained model
  std::size_t best_epoch = 0;
  double best_val = 0.0;
};

/// `epoch,train_loss,val_loss`.
std::string history_csv(const TrainHistory& h);

struct TrainedModel {
  ForecastModel model;
  ScalerParams scaler;
  WindowSpec window;
  SplitPlan split;
  TrainConfig config;
  TrainHistory history;
  std::vector<std::string> node_ids;
  std::vector<std::string> channel_names;  // including any identity channels
};

/// Scales with statistics of the training windows, then minimizes the
/// scaled mse_loss with Adam on shuffled mini-batches and stops after
/// `patience` epochs without a validation improvement. The best-validation
/// parameters are restored.
TrainedModel train(const TimePanel& panel, ForecastModel model, const WindowSpec& window, const TrainConfig& cfg);

/// Mean scaled loss of `model` over windows [begin, end).
double evaluate_loss(const ForecastModel& model, const TimePanel& scaled, const std::vector<Window>& windows,
                     const WindowSpec& spec, std::size_t begin, std::size_t end);

/// Forecasts in original units for the given window indices; records
/// attention snapshots when the model has attention layers.
ForecastResult predict(const TrainedModel& trained, const TimePanel& panel, const std::vector<std::size_t>& windows);

/// Window indices whose target day lies in [first, last] (inclusive dates,
/// calendar panels) or whose target step lies in [first, last].
std::vector<std::size_t> windows_in_range(const TimePanel& panel, const WindowSpec& spec, std::int64_t first,
                                          std::int64_t last);
std::vector<std::size_t> test_windows(const TrainedModel& trained);

struct EnsembleMember {
  std::uint64_t seed = 0;
  std::optional<TrainedModel> model;
  std::optional<ForecastResult> forecast;
  std::string error;  // empty on success
};

/// Trains and predicts once per seed, independently. A failing member keeps
/// its error message; the others are unaffected. Ordered by seed.
std::vector<EnsembleMember> deep_ensemble(const TimePanel& panel, const std::function<ForecastModel(std::uint64_t)>& make,
                                          const WindowSpec& window, const TrainConfig& cfg,
                                          const std::vector<std::uint64_t>& seeds,
                                          const std::vector<std::size_t>& predict_windows);

/// JSON model file: family, architecture, parameters, scaler, window, graph.
std::string model_json(const TrainedModel& trained);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace gridattn

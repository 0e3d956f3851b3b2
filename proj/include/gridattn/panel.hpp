// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gridattn/autodiff.hpp"
#include "gridattn/layers.hpp"
#include "gridattn/matrix.hpp"

namespace gridattn {

inline constexpr std::size_t kSlotsPerDay = 48;
inline constexpr std::int64_t kHalfHourMinutes = 30;

/// Node x channel x time inputs plus a node x time target.
struct TimePanel {
  std::vector<std::string> node_ids;
  std::vector<std::string> channel_names;
  std::vector<Matrix> features;     // one n x T matrix per channel
  Matrix target;                    // n x T
  std::vector<std::int64_t> times;  // minutes since the epoch, or a plain step index
  std::int64_t step = kHalfHourMinutes;
  bool calendar = true;             // times are wall-clock minutes
  std::vector<int> regimes;         // optional per-step labels (synthetic data)

  std::size_t nodes() const { return node_ids.size(); }
  std::size_t channels() const { return features.size(); }
  std::size_t length() const { return times.size(); }

  /// Shapes agree and times advance by exactly `step`.
  void validate() const;
};

/// "YYYY-MM-DD HH:MM[:SS]" or with a 'T' separator, as minutes since the epoch.
std::int64_t parse_timestamp(std::string_view text);
std::string format_timestamp(std::int64_t minutes);
std::string format_date(std::int64_t minutes);
std::int64_t parse_date(std::string_view text);  // midnight of that day

/// Appends one indicator channel per node ("node:<id>"), 1 on that node's row
/// and 0 elsewhere, so that models sharing weights across nodes can tell them
/// apart.
TimePanel with_node_identity(const TimePanel& panel);

/// Load CSV `timestamp,node_id,load,<features...>`. Channel 0 is the load
/// itself; every other column becomes one more input channel. Rejects gaps,
/// duplicates and nodes with differing time axes.
TimePanel read_load_csv(const std::filesystem::path& path);

struct WindowSpec {
  std::size_t input_len = kSlotsPerDay;
  std::size_t horizon = kSlotsPerDay;
  std::size_t stride = kSlotsPerDay;
  bool concurrent = false;   // target covers the last `horizon` input steps instead of the following ones
  bool day_aligned = true;   // first window starts at the first midnight

  static WindowSpec daily() { return {}; }
  /// Target is the final input step; the input is the `history` steps ending there.
  static WindowSpec per_step(std::size_t history = 1) { return {history, 1, 1, true, false}; }
  std::size_t input_width(std::size_t channels) const { return input_len * channels; }
};

struct Window {
  std::size_t input_start = 0;
  std::size_t target_start = 0;
};

/// Input windows of `input_len` steps followed by `horizon` target steps,
/// advancing by `stride`.
std::vector<Window> make_windows(const TimePanel& panel, const WindowSpec& spec);

/// Per-channel min/max of the inputs and per-node min/max of the target.
struct ScalerParams {
  std::vector<double> channel_min, channel_max;
  std::vector<bool> channel_constant;
  std::vector<double> target_min, target_max;
  std::vector<bool> target_constant;
};

/// Fits on time steps [begin, end).
ScalerParams fit_scaler(const TimePanel& panel, std::size_t begin, std::size_t end);
TimePanel apply_scaler(const TimePanel& panel, const ScalerParams& s);
TimePanel invert_scaler(const TimePanel& scaled, const ScalerParams& s);
/// Maps a scaled n x h target block back to original units.
Matrix invert_target(const Matrix& scaled, const ScalerParams& s);

/// n x (input_len * d); node row holds channel 0's history, then channel 1's, ...
Matrix window_input(const TimePanel& panel, const Window& w, const WindowSpec& spec);
Matrix window_target(const TimePanel& panel, const Window& w, const WindowSpec& spec);

/// (1/T) sum_t sum_i (pred - target)^2 over an n x T block.
double mse_loss(const Matrix& pred, const Matrix& target);
DiffTensor mse_loss(Tape& tape, const DiffTensor& pred, const Matrix& target);

/// One forecast block per window: predictions and truths in original units.
struct ForecastResult {
  std::vector<std::string> node_ids;
  std::vector<std::string> labels;  // target date (calendar data) or step index
  std::vector<std::int64_t> starts; // target start time per block
  std::vector<Matrix> predictions;  // n x horizon each
  std::vector<Matrix> truths;
  std::vector<int> regimes;         // per block, when the panel has them
  std::vector<std::vector<AttentionSnapshot>> attention;

  std::size_t blocks() const { return predictions.size(); }
};

/// `date,node_id,slot,y_true,y_pred`.
std::string forecast_csv(const ForecastResult& r);

/// Parses a forecast CSV back into blocks keyed by date.
ForecastResult read_forecast_csv(const std::filesystem::path& path);

}  // namespace gridattn

// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "gridattn/forecasting.hpp"
#include "gridattn/panel.hpp"

namespace gridattn {

/// Steps per forecast day: 1440 / step for calendar panels, 48 otherwise.
std::size_t steps_per_day(const TimePanel& panel);

/// Start times of the complete days of the panel whose start lies in
/// [first, last]. Calendar days start at midnight; plain step panels are cut
/// into consecutive days from step 0.
std::vector<std::int64_t> forecast_days(const TimePanel& panel, std::int64_t first, std::int64_t last);

/// yhat(day, slot, node) = y(day - lag_days, slot, node). lag_days is 1 or 7.
ForecastResult persistence_forecast(const TimePanel& panel, int lag_days, const std::vector<std::int64_t>& day_starts);

struct FeedForwardRun {
  TrainedModel model;
  ForecastResult forecast;
};

/// Per-node perceptrons trained with the same windows, scaling and early
/// stopping as the graph models, then used on `predict_windows` (the test
/// windows when empty).
FeedForwardRun feedforward_train_predict(const TimePanel& panel, const WindowSpec& window, const TrainConfig& cfg,
                                         std::vector<std::size_t> hidden = {128, 128},
                                         std::vector<std::size_t> predict_windows = {});

}  // namespace gridattn

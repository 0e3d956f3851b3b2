// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridattn/baselines.hpp"

#include "gridattn/error.hpp"

namespace gridattn {

std::size_t steps_per_day(const TimePanel& panel) {
  if (!panel.calendar) return kSlotsPerDay;
  if (panel.step <= 0 || 1440 % panel.step != 0) {
    throw ContractError("baselines::persistence: step of " + std::to_string(panel.step) + " minutes does not divide a day");
  }
  return static_cast<std::size_t>(1440 / panel.step);
}

namespace {

// Index of time `t` on the panel axis, or length() when absent.
std::size_t index_of(const TimePanel& panel, std::int64_t t) {
  if (panel.length() == 0 || t < panel.times.front()) return panel.length();
  const std::int64_t off = t - panel.times.front();
  if (off % panel.step != 0) return panel.length();
  const auto i = static_cast<std::size_t>(off / panel.step);
  return i < panel.length() ? i : panel.length();
}

bool is_day_start(const TimePanel& panel, std::int64_t t, std::size_t per_day) {
  if (panel.calendar) return ((t % 1440) + 1440) % 1440 == 0;
  return t % static_cast<std::int64_t>(per_day) == 0;
}

}  // namespace

std::vector<std::int64_t> forecast_days(const TimePanel& panel, std::int64_t first, std::int64_t last) {
  const std::size_t per_day = steps_per_day(panel);
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i + per_day <= panel.length(); ++i) {
    const std::int64_t t = panel.times[i];
    if (is_day_start(panel, t, per_day) && t >= first && t <= last) out.push_back(t);
  }
  return out;
}

ForecastResult persistence_forecast(const TimePanel& panel, int lag_days, const std::vector<std::int64_t>& day_starts) {
  const std::string ctx = "baselines::persistence";
  if (lag_days != 1 && lag_days != 7) throw ContractError(ctx + ": lag must be 1 or 7 days, got " + std::to_string(lag_days));
  if (day_starts.empty()) throw ContractError(ctx + ": no days to forecast");
  const std::size_t per_day = steps_per_day(panel);
  const std::size_t lag = static_cast<std::size_t>(lag_days) * per_day;
  ForecastResult r;
  r.node_ids = panel.node_ids;
  for (std::int64_t day : day_starts) {
    const std::size_t i = index_of(panel, day);
    const std::string label = panel.calendar ? format_date(day) : std::to_string(day);
    if (i == panel.length() || i + per_day > panel.length()) throw ContractError(ctx + ": day " + label + " outside data");
    if (i < lag) {
      throw ContractError(ctx + ": day " + label + " needs " + std::to_string(lag_days) + " day(s) of history");
    }
    Matrix pred(panel.nodes(), per_day), truth(panel.nodes(), per_day);
    for (std::size_t v = 0; v < panel.nodes(); ++v)
      for (std::size_t k = 0; k < per_day; ++k) {
        pred(v, k) = panel.target(v, i + k - lag);
        truth(v, k) = panel.target(v, i + k);
      }
    r.labels.push_back(label);
    r.starts.push_back(day);
    r.predictions.push_back(std::move(pred));
    r.truths.push_back(std::move(truth));
    if (!panel.regimes.empty()) r.regimes.push_back(panel.regimes[i]);
  }
  return r;
}

FeedForwardRun feedforward_train_predict(const TimePanel& panel, const WindowSpec& window, const TrainConfig& cfg,
                                         std::vector<std::size_t> hidden, std::vector<std::size_t> predict_windows) {
  FeedForwardSpec spec{panel.nodes(), window.input_width(cfg.channels(panel)), window.horizon, std::move(hidden)};
  FeedForwardRun run{train(panel, ForecastModel::make_feedforward(std::move(spec), cfg.seed), window, cfg), {}};
  run.forecast = predict(run.model, panel, predict_windows.empty() ? test_windows(run.model) : predict_windows);
  return run;
}

}  // namespace gridattn

// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridattn/panel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "gridattn/csv.hpp"
#include "gridattn/error.hpp"

namespace gridattn {

void TimePanel::validate() const {
  const std::size_t n = nodes(), t = length();
  if (n == 0 || t == 0) throw ContractError("forecasting::TimePanel: empty panel");
  if (channel_names.size() != features.size()) throw DimensionError("forecasting::TimePanel: channel name count mismatch");
  for (const auto& f : features) {
    if (f.rows() != n || f.cols() != t) throw DimensionError("forecasting::TimePanel: feature shape " + f.shape_str());
  }
  if (target.rows() != n || target.cols() != t) throw DimensionError("forecasting::TimePanel: target shape " + target.shape_str());
  if (!regimes.empty() && regimes.size() != t) throw DimensionError("forecasting::TimePanel: regime count mismatch");
  for (std::size_t i = 1; i < t; ++i) {
    if (times[i] - times[i - 1] != step) {
      throw ContractError("forecasting::TimePanel: time step broken between index " + std::to_string(i - 1) + " and " +
                          std::to_string(i));
    }
  }
}

namespace {

using std::chrono::days;
using std::chrono::sys_days;
using std::chrono::year_month_day;

int parse_field(std::string_view text, std::size_t pos, std::size_t len, std::string_view full) {
  if (pos + len > text.size()) throw ContractError("forecasting::parse_timestamp: malformed '" + std::string(full) + "'");
  return static_cast<int>(parse_int(text.substr(pos, len), "forecasting::parse_timestamp"));
}

std::int64_t days_since_epoch(std::string_view text) {
  const int y = parse_field(text, 0, 4, text), m = parse_field(text, 5, 2, text), d = parse_field(text, 8, 2, text);
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') {
    throw ContractError("forecasting::parse_timestamp: malformed '" + std::string(text) + "'");
  }
  const year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                           std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw ContractError("forecasting::parse_timestamp: invalid date '" + std::string(text) + "'");
  return sys_days{ymd}.time_since_epoch().count();
}

}  // namespace

std::int64_t parse_date(std::string_view text) { return days_since_epoch(text) * 1440; }

std::int64_t parse_timestamp(std::string_view text) {
  std::int64_t minutes = parse_date(text);
  if (text.size() == 10) return minutes;
  if (text.size() < 16 || (text[10] != ' ' && text[10] != 'T') || text[13] != ':') {
    throw ContractError("forecasting::parse_timestamp: malformed '" + std::string(text) + "'");
  }
  const int hh = parse_field(text, 11, 2, text), mm = parse_field(text, 14, 2, text);
  if (hh > 23 || mm > 59) throw ContractError("forecasting::parse_timestamp: invalid time '" + std::string(text) + "'");
  return minutes + hh * 60 + mm;
}

std::string format_date(std::int64_t minutes) {
  const std::int64_t day = minutes >= 0 ? minutes / 1440 : -((-minutes + 1439) / 1440);
  const year_month_day ymd{sys_days{days{day}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_timestamp(std::int64_t minutes) {
  const std::int64_t in_day = ((minutes % 1440) + 1440) % 1440;
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d:%02d", static_cast<int>(in_day / 60), static_cast<int>(in_day % 60));
  return format_date(minutes) + " " + buf;
}

TimePanel with_node_identity(const TimePanel& panel) {
  TimePanel out = panel;
  for (std::size_t i = 0; i < panel.nodes(); ++i) {
    Matrix ch(panel.nodes(), panel.length());
    for (std::size_t t = 0; t < panel.length(); ++t) ch(i, t) = 1.0;
    out.features.push_back(std::move(ch));
    out.channel_names.push_back("node:" + panel.node_ids[i]);
  }
  return out;
}

TimePanel read_load_csv(const std::filesystem::path& path) {
  const std::string ctx = "forecasting::read_load_csv";
  CsvTable t = read_csv(path, ctx);
  const std::size_t ts = t.column("timestamp", ctx), node = t.column("node_id", ctx), load = t.column("load", ctx);
  std::vector<std::size_t> extra;
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (c != ts && c != node && c != load) extra.push_back(c);

  struct Row { std::int64_t time; std::vector<double> values; };
  std::map<std::string, std::size_t> index;
  std::vector<std::string> ids;
  std::vector<std::vector<Row>> per_node;
  for (const auto& r : t.rows) {
    auto [it, inserted] = index.emplace(r[node], ids.size());
    if (inserted) {
      ids.push_back(r[node]);
      per_node.emplace_back();
    }
    Row row{parse_timestamp(r[ts]), {parse_double(r[load], ctx)}};
    for (std::size_t c : extra) row.values.push_back(parse_double(r[c], ctx));
    per_node[it->second].push_back(std::move(row));
  }
  if (ids.empty()) throw ContractError(ctx + ": no rows in " + path.string());

  for (auto& rows : per_node)
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.time < b.time; });
  const auto& axis = per_node.front();
  for (std::size_t i = 1; i < axis.size(); ++i) {
    const std::int64_t dt = axis[i].time - axis[i - 1].time;
    if (dt == 0) throw ContractError(ctx + ": duplicate timestamp " + format_timestamp(axis[i].time) + " for node " + ids[0]);
    if (dt != kHalfHourMinutes) {
      throw ContractError(ctx + ": gap after " + format_timestamp(axis[i - 1].time) + " for node " + ids[0]);
    }
  }
  for (std::size_t v = 1; v < ids.size(); ++v) {
    const auto& rows = per_node[v];
    bool same = rows.size() == axis.size();
    for (std::size_t i = 0; same && i < rows.size(); ++i) same = rows[i].time == axis[i].time;
    if (!same) throw ContractError(ctx + ": node " + ids[v] + " does not share the time axis of node " + ids[0]);
  }

  TimePanel p;
  p.node_ids = ids;
  p.channel_names.push_back("load");
  for (std::size_t c : extra) p.channel_names.push_back(t.header[c]);
  const std::size_t n = ids.size(), len = axis.size();
  p.features.assign(p.channel_names.size(), Matrix(n, len));
  p.target = Matrix(n, len);
  for (const auto& r : axis) p.times.push_back(r.time);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t i = 0; i < len; ++i) {
      const auto& vals = per_node[v][i].values;
      for (std::size_t c = 0; c < vals.size(); ++c) p.features[c](v, i) = vals[c];
      p.target(v, i) = vals[0];
    }
  }
  p.validate();
  return p;
}

std::vector<Window> make_windows(const TimePanel& panel, const WindowSpec& spec) {
  if (spec.input_len == 0 || spec.horizon == 0 || spec.stride == 0) {
    throw ContractError("forecasting::make_windows: window lengths must be positive");
  }
  if (spec.concurrent && spec.horizon > spec.input_len) {
    throw ContractError("forecasting::make_windows: concurrent windows need horizon <= input_len");
  }
  const std::size_t len = panel.length();
  std::size_t offset = 0;
  if (spec.day_aligned && panel.calendar) {
    while (offset < len && ((panel.times[offset] % 1440) + 1440) % 1440 != 0) ++offset;
  }
  const std::size_t span = spec.concurrent ? spec.input_len : spec.input_len + spec.horizon;
  if (len < offset + span) {
    throw ContractError("forecasting::make_windows: need at least " + std::to_string(span) + " aligned steps, have " +
                        std::to_string(len > offset ? len - offset : 0));
  }
  std::vector<Window> out;
  for (std::size_t s = offset; s + span <= len; s += spec.stride)
    out.push_back({s, spec.concurrent ? s + spec.input_len - spec.horizon : s + spec.input_len});
  return out;
}

ScalerParams fit_scaler(const TimePanel& panel, std::size_t begin, std::size_t end) {
  if (begin >= end || end > panel.length()) throw ContractError("forecasting::fit_scaler: empty training range");
  ScalerParams s;
  for (const auto& f : panel.features) {
    double lo = f(0, begin), hi = lo;
    for (std::size_t v = 0; v < f.rows(); ++v)
      for (std::size_t t = begin; t < end; ++t) {
        lo = std::min(lo, f(v, t));
        hi = std::max(hi, f(v, t));
      }
    s.channel_min.push_back(lo);
    s.channel_max.push_back(hi);
    s.channel_constant.push_back(hi == lo);
  }
  for (std::size_t v = 0; v < panel.nodes(); ++v) {
    double lo = panel.target(v, begin), hi = lo;
    for (std::size_t t = begin; t < end; ++t) {
      lo = std::min(lo, panel.target(v, t));
      hi = std::max(hi, panel.target(v, t));
    }
    s.target_min.push_back(lo);
    s.target_max.push_back(hi);
    s.target_constant.push_back(hi == lo);
  }
  return s;
}

namespace {

double scale(double v, double lo, double hi, bool constant) { return constant ? 0.0 : (v - lo) / (hi - lo); }
double unscale(double v, double lo, double hi, bool constant) { return constant ? lo : lo + v * (hi - lo); }

void check_scaler(const TimePanel& p, const ScalerParams& s) {
  if (s.channel_min.size() != p.channels() || s.target_min.size() != p.nodes()) {
    throw DimensionError("forecasting::apply_scaler: scaler does not match panel (" + std::to_string(s.channel_min.size()) +
                         " channels, " + std::to_string(s.target_min.size()) + " nodes)");
  }
}

}  // namespace

TimePanel apply_scaler(const TimePanel& panel, const ScalerParams& s) {
  check_scaler(panel, s);
  TimePanel out = panel;
  for (std::size_t c = 0; c < out.channels(); ++c)
    for (double& v : out.features[c].values()) v = scale(v, s.channel_min[c], s.channel_max[c], s.channel_constant[c]);
  for (std::size_t v = 0; v < out.nodes(); ++v)
    for (double& x : out.target.row(v)) x = scale(x, s.target_min[v], s.target_max[v], s.target_constant[v]);
  return out;
}

TimePanel invert_scaler(const TimePanel& scaled, const ScalerParams& s) {
  check_scaler(scaled, s);
  TimePanel out = scaled;
  for (std::size_t c = 0; c < out.channels(); ++c)
    for (double& v : out.features[c].values()) v = unscale(v, s.channel_min[c], s.channel_max[c], s.channel_constant[c]);
  out.target = invert_target(scaled.target, s);
  return out;
}

Matrix invert_target(const Matrix& scaled, const ScalerParams& s) {
  if (scaled.rows() != s.target_min.size()) throw DimensionError("forecasting::invert_target: node count mismatch");
  Matrix out = scaled;
  for (std::size_t v = 0; v < out.rows(); ++v)
    for (double& x : out.row(v)) x = unscale(x, s.target_min[v], s.target_max[v], s.target_constant[v]);
  return out;
}

Matrix window_input(const TimePanel& panel, const Window& w, const WindowSpec& spec) {
  const std::size_t n = panel.nodes(), d = panel.channels(), len = spec.input_len;
  Matrix out(n, len * d);
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t c = 0; c < d; ++c)
      for (std::size_t k = 0; k < len; ++k) out(v, c * len + k) = panel.features[c](v, w.input_start + k);
  return out;
}

Matrix window_target(const TimePanel& panel, const Window& w, const WindowSpec& spec) {
  Matrix out(panel.nodes(), spec.horizon);
  for (std::size_t v = 0; v < panel.nodes(); ++v)
    for (std::size_t k = 0; k < spec.horizon; ++k) out(v, k) = panel.target(v, w.target_start + k);
  return out;
}

double mse_loss(const Matrix& pred, const Matrix& target) {
  if (!pred.same_shape(target)) {
    throw DimensionError("forecasting::mse_loss: prediction " + pred.shape_str() + " vs target " + target.shape_str());
  }
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred.values()[i] - target.values()[i];
    s += e * e;
  }
  return s / static_cast<double>(pred.cols());
}

DiffTensor mse_loss(Tape& tape, const DiffTensor& pred, const Matrix& target) {
  if (!pred.value().same_shape(target)) {
    throw DimensionError("forecasting::mse_loss: prediction " + pred.value().shape_str() + " vs target " +
                         target.shape_str());
  }
  DiffTensor diff = tape.sub(pred, DiffTensor::constant(target));
  return tape.scalar_mul(1.0 / static_cast<double>(target.cols()), tape.sum(tape.mul(diff, diff)));
}

std::string forecast_csv(const ForecastResult& r) {
  std::ostringstream os;
  os << "date,node_id,slot,y_true,y_pred\n";
  for (std::size_t b = 0; b < r.blocks(); ++b) {
    const Matrix& p = r.predictions[b];
    const Matrix& y = r.truths[b];
    for (std::size_t v = 0; v < p.rows(); ++v)
      for (std::size_t k = 0; k < p.cols(); ++k)
        os << r.labels[b] << ',' << r.node_ids[v] << ',' << k << ',' << format_double(y(v, k)) << ','
           << format_double(p(v, k)) << '\n';
  }
  return os.str();
}

ForecastResult read_forecast_csv(const std::filesystem::path& path) {
  const std::string ctx = "forecasting::read_forecast_csv";
  CsvTable t = read_csv(path, ctx);
  const std::size_t dc = t.column("date", ctx), nc = t.column("node_id", ctx), sc = t.column("slot", ctx),
                    yc = t.column("y_true", ctx), pc = t.column("y_pred", ctx);
  std::map<std::string, std::size_t> date_index, node_index;
  ForecastResult r;
  std::size_t slots = 0;
  for (const auto& row : t.rows) {
    if (date_index.emplace(row[dc], r.labels.size()).second) r.labels.push_back(row[dc]);
    if (node_index.emplace(row[nc], r.node_ids.size()).second) r.node_ids.push_back(row[nc]);
    const long long s = parse_int(row[sc], ctx);
    if (s < 0) throw ContractError(ctx + ": negative slot in " + path.string());
    slots = std::max(slots, static_cast<std::size_t>(s) + 1);
  }
  const std::size_t n = r.node_ids.size(), blocks = r.labels.size();
  r.predictions.assign(blocks, Matrix(n, slots, std::nan("")));
  r.truths.assign(blocks, Matrix(n, slots, std::nan("")));
  for (const auto& row : t.rows) {
    const std::size_t b = date_index[row[dc]], v = node_index[row[nc]];
    const auto s = static_cast<std::size_t>(parse_int(row[sc], ctx));
    if (!std::isnan(r.predictions[b](v, s))) {
      throw ContractError(ctx + ": duplicate entry " + row[dc] + "/" + row[nc] + "/" + row[sc] + " in " + path.string());
    }
    r.truths[b](v, s) = parse_double(row[yc], ctx);
    r.predictions[b](v, s) = parse_double(row[pc], ctx);
  }
  for (std::size_t b = 0; b < blocks; ++b) {
    if (!all_finite(r.predictions[b])) throw ContractError(ctx + ": incomplete block for date " + r.labels[b]);
    r.starts.push_back(static_cast<std::int64_t>(b));
  }
  return r;
}

}  // namespace gridattn

// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridattn/metrics.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "gridattn/csv.hpp"
#include "gridattn/error.hpp"

namespace gridattn {

namespace {

void check_pair(const Matrix& y, const Matrix& yhat, const char* op) {
  if (!y.same_shape(yhat)) {
    throw DimensionError(std::string("metrics::") + op + ": truth " + y.shape_str() + " vs forecast " + yhat.shape_str());
  }
  if (y.cols() == 0) throw ContractError(std::string("metrics::") + op + ": no time steps");
}

Matrix concat_time(const std::vector<Matrix>& blocks) {
  std::size_t cols = 0;
  for (const auto& b : blocks) cols += b.cols();
  Matrix out(blocks.empty() ? 0 : blocks.front().rows(), cols);
  std::size_t c0 = 0;
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < b.rows(); ++i)
      for (std::size_t k = 0; k < b.cols(); ++k) out(i, c0 + k) = b(i, k);
    c0 += b.cols();
  }
  return out;
}

}  // namespace

double mape(const Matrix& y, const Matrix& yhat, const std::vector<std::string>& time_labels) {
  check_pair(y, yhat, "mape");
  double total = 0.0;
  std::vector<std::string> zeros;
  for (std::size_t t = 0; t < y.cols(); ++t) {
    double load = 0.0, err = 0.0;
    for (std::size_t i = 0; i < y.rows(); ++i) {
      load += y(i, t);
      err += y(i, t) - yhat(i, t);
    }
    if (load == 0.0) {
      zeros.push_back(t < time_labels.size() ? time_labels[t] : "t=" + std::to_string(t));
      continue;
    }
    total += std::abs(err) / std::abs(load);
  }
  if (!zeros.empty()) {
    std::string list;
    for (std::size_t k = 0; k < zeros.size() && k < 20; ++k) list += (k ? ", " : "") + zeros[k];
    if (zeros.size() > 20) list += ", ... (" + std::to_string(zeros.size()) + " in total)";
    throw MetricError("metrics::mape: zero national load at " + list);
  }
  return 100.0 * total / static_cast<double>(y.cols());
}

double rmse(const Matrix& y, const Matrix& yhat) {
  check_pair(y, yhat, "rmse");
  double total = 0.0;
  for (std::size_t t = 0; t < y.cols(); ++t)
    for (std::size_t i = 0; i < y.rows(); ++i) {
      const double e = y(i, t) - yhat(i, t);
      total += e * e;
    }
  return std::sqrt(total / static_cast<double>(y.cols()));
}

MetricReport evaluate_forecast(const ForecastResult& r) {
  if (r.blocks() == 0) throw ContractError("metrics::evaluate: forecast has no blocks");
  MetricReport m;
  std::vector<std::string> labels;
  for (std::size_t b = 0; b < r.blocks(); ++b) {
    std::vector<std::string> block_labels;
    for (std::size_t k = 0; k < r.truths[b].cols(); ++k) block_labels.push_back(r.labels[b] + " slot " + std::to_string(k));
    m.block_labels.push_back(r.labels[b]);
    m.block_mape.push_back(mape(r.truths[b], r.predictions[b], block_labels));
    m.block_rmse.push_back(rmse(r.truths[b], r.predictions[b]));
    labels.insert(labels.end(), block_labels.begin(), block_labels.end());
  }
  const Matrix y = concat_time(r.truths), yhat = concat_time(r.predictions);
  m.mape_percent = mape(y, yhat, labels);
  m.rmse = rmse(y, yhat);
  return m;
}

std::string report_csv(const MetricReport& m) {
  std::ostringstream os;
  os << "metric,value,scope\n";
  os << "mape," << format_double(m.mape_percent) << ",all\n";
  os << "rmse," << format_double(m.rmse) << ",all\n";
  for (std::size_t b = 0; b < m.block_labels.size(); ++b) {
    os << "mape," << format_double(m.block_mape[b]) << ',' << m.block_labels[b] << '\n';
    os << "rmse," << format_double(m.block_rmse[b]) << ',' << m.block_labels[b] << '\n';
  }
  return os.str();
}

void attach_truth(ForecastResult& r, const TimePanel& panel) {
  const std::string ctx = "metrics::attach_truth";
  std::map<std::string, std::size_t> node_row;
  for (std::size_t i = 0; i < panel.nodes(); ++i) node_row[panel.node_ids[i]] = i;
  std::map<std::int64_t, std::size_t> time_col;
  for (std::size_t t = 0; t < panel.length(); ++t) time_col[panel.times[t]] = t;
  for (std::size_t b = 0; b < r.blocks(); ++b) {
    const std::int64_t t0 = panel.calendar ? parse_date(r.labels[b]) : parse_int(r.labels[b], ctx);
    Matrix& y = r.truths[b];
    for (std::size_t v = 0; v < r.node_ids.size(); ++v) {
      auto row = node_row.find(r.node_ids[v]);
      if (row == node_row.end()) throw ContractError(ctx + ": node " + r.node_ids[v] + " not in the truth data");
      for (std::size_t k = 0; k < y.cols(); ++k) {
        auto col = time_col.find(t0 + static_cast<std::int64_t>(k) * panel.step);
        if (col == time_col.end()) throw ContractError(ctx + ": " + r.labels[b] + " slot " + std::to_string(k) + " not in the truth data");
        y(v, k) = panel.target(row->second, col->second);
      }
    }
  }
}

}  // namespace gridattn

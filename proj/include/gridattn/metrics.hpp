// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "gridattn/matrix.hpp"
#include "gridattn/panel.hpp"

namespace gridattn {

/// (100/T) sum_t |sum_i (y - yhat)| / |sum_i y| over n x T blocks. Errors of
/// different nodes cancel inside the national sum. `time_labels` (length T,
/// optional) name the offending steps when a national load is zero.
double mape(const Matrix& y, const Matrix& yhat, const std::vector<std::string>& time_labels = {});

/// sqrt((1/T) sum_t sum_i (y - yhat)^2). Node errors are summed, not
/// averaged, so the value grows with the number of nodes.
double rmse(const Matrix& y, const Matrix& yhat);

struct MetricReport {
  double mape_percent = 0.0;
  double rmse = 0.0;
  std::vector<std::string> block_labels;
  std::vector<double> block_mape, block_rmse;
};

/// Concatenates the blocks along time and scores them; also one score per
/// block.
MetricReport evaluate_forecast(const ForecastResult& r);

/// `metric,value,scope`; scope is "all" or a block label.
std::string report_csv(const MetricReport& m);

/// Replaces the truths of `r` with the panel target at the same nodes and
/// times. Block labels are dates (calendar panels) or step indices.
void attach_truth(ForecastResult& r, const TimePanel& panel);

}  // namespace gridattn

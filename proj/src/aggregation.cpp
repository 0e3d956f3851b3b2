// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridattn/aggregation.hpp"

#include <algorithm>
#include <sstream>

#include "gridattn/csv.hpp"
#include "gridattn/error.hpp"

namespace gridattn {

void ExpertPanel::validate() const {
  const std::string ctx = "aggregation::panel";
  if (forecasts.empty()) throw ContractError(ctx + ": no experts");
  if (experts.size() != forecasts.size()) throw ContractError(ctx + ": expert names and forecasts differ in count");
  const ForecastResult& ref = forecasts.front();
  if (ref.blocks() == 0) throw ContractError(ctx + ": experts have no forecast blocks");
  for (std::size_t j = 0; j < forecasts.size(); ++j) {
    const ForecastResult& f = forecasts[j];
    if (f.labels != ref.labels || f.node_ids != ref.node_ids || f.blocks() != ref.blocks()) {
      throw ContractError(ctx + ": expert " + experts[j] + " is not aligned with expert " + experts.front());
    }
    for (std::size_t b = 0; b < f.blocks(); ++b) {
      if (!f.predictions[b].same_shape(ref.predictions[b]) || !f.truths[b].same_shape(ref.predictions[b])) {
        throw ContractError(ctx + ": expert " + experts[j] + " block " + f.labels[b] + " has a different shape");
      }
      if (!all_finite(f.predictions[b]) || !all_finite(f.truths[b])) {
        throw ContractError(ctx + ": expert " + experts[j] + " block " + f.labels[b] + " has non-finite values");
      }
      if (f.truths[b].values() != ref.truths[b].values()) {
        throw ContractError(ctx + ": expert " + experts[j] + " block " + f.labels[b] + " has different truths");
      }
    }
  }
}

ExpertPanel make_expert_panel(std::vector<std::string> experts, std::vector<ForecastResult> forecasts) {
  ExpertPanel p{std::move(experts), std::move(forecasts)};
  p.validate();
  return p;
}

ExpertPanel read_expert_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ContractError("aggregation::read_experts: " + dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ContractError("aggregation::read_experts: no .csv forecasts in " + dir.string());
  ExpertPanel p;
  for (const auto& f : files) {
    p.experts.push_back(f.stem().string());
    p.forecasts.push_back(read_forecast_csv(f));
  }
  p.validate();
  return p;
}

std::string weights_csv(const WeightTrajectory& w) {
  std::ostringstream os;
  os << "date,expert,weight\n";
  for (std::size_t t = 0; t < w.weights.size(); ++t)
    for (std::size_t j = 0; j < w.experts.size(); ++j) os << w.labels[t] << ',' << w.experts[j] << ',' << format_double(w.weights[t][j]) << '\n';
  return os.str();
}

MlPoly::MlPoly(std::size_t experts) : regret_(experts, 0.0), squared_(experts, 0.0) {
  if (experts == 0) throw ContractError("aggregation::mlpoly: need at least one expert");
}

std::vector<double> MlPoly::weights() const {
  const std::size_t k = regret_.size();
  std::vector<double> p(k, 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (regret_[j] > 0.0) p[j] = regret_[j] / (1.0 + squared_[j]);
    total += p[j];
  }
  if (!(total > 0.0)) return std::vector<double>(k, 1.0 / static_cast<double>(k));
  for (double& v : p) v /= total;
  return p;
}

void MlPoly::update(const std::vector<double>& expert_losses, double aggregate_loss) {
  if (expert_losses.size() != regret_.size()) throw DimensionError("aggregation::mlpoly: loss count differs from expert count");
  for (std::size_t j = 0; j < regret_.size(); ++j) {
    const double r = aggregate_loss - expert_losses[j];
    regret_[j] += r;
    squared_[j] += r * r;
  }
}

namespace {

ForecastResult skeleton(const ForecastResult& ref) {
  ForecastResult out;
  out.node_ids = ref.node_ids;
  out.labels = ref.labels;
  out.starts = ref.starts;
  out.truths = ref.truths;
  out.regimes = ref.regimes;
  return out;
}

double block_loss(const Matrix& pred, const Matrix& truth) {
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred.values()[i] - truth.values()[i];
    s += e * e;
  }
  return s;
}

Matrix mix(const ExpertPanel& panel, std::size_t block, const std::vector<double>& p) {
  Matrix out(panel.forecasts.front().predictions[block].rows(), panel.forecasts.front().predictions[block].cols());
  for (std::size_t j = 0; j < panel.size(); ++j) {
    const Matrix& x = panel.forecasts[j].predictions[block];
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += p[j] * x.values()[i];
  }
  return out;
}

WeightTrajectory empty_trajectory(const ExpertPanel& panel) {
  WeightTrajectory w;
  w.experts = panel.experts;
  w.labels = panel.forecasts.front().labels;
  w.regret.assign(panel.size(), 0.0);
  w.squared_regret.assign(panel.size(), 0.0);
  return w;
}

Matrix row_of(const Matrix& m, std::size_t r) {
  const auto src = m.row(r);
  return Matrix(1, m.cols(), std::vector<double>(src.begin(), src.end()));
}

ExpertPanel node_slice(const ExpertPanel& panel, std::size_t node) {
  ExpertPanel out;
  out.experts = panel.experts;
  for (const auto& f : panel.forecasts) {
    ForecastResult g = skeleton(f);
    g.node_ids = {f.node_ids[node]};
    for (std::size_t b = 0; b < f.blocks(); ++b) {
      g.predictions.push_back(row_of(f.predictions[b], node));
      g.truths[b] = row_of(f.truths[b], node);
    }
    out.forecasts.push_back(std::move(g));
  }
  return out;
}

AggregateResult run_rule(const ExpertPanel& panel, AggregationRule rule) {
  return rule == AggregationRule::kUniform ? uniform_aggregate(panel) : mlpoly_aggregate(panel);
}

}  // namespace

AggregateResult uniform_aggregate(const ExpertPanel& panel) {
  panel.validate();
  AggregateResult r{skeleton(panel.forecasts.front()), empty_trajectory(panel)};
  const std::vector<double> p(panel.size(), 1.0 / static_cast<double>(panel.size()));
  for (std::size_t b = 0; b < panel.rounds(); ++b) {
    Matrix sum(panel.forecasts.front().predictions[b].rows(), panel.forecasts.front().predictions[b].cols());
    for (const auto& f : panel.forecasts)
      for (std::size_t i = 0; i < sum.size(); ++i) sum.values()[i] += f.predictions[b].values()[i];
    for (double& v : sum.values()) v /= static_cast<double>(panel.size());
    r.forecast.predictions.push_back(std::move(sum));
    r.weights.weights.push_back(p);
  }
  return r;
}

AggregateResult mlpoly_aggregate(const ExpertPanel& panel) {
  panel.validate();
  AggregateResult r{skeleton(panel.forecasts.front()), empty_trajectory(panel)};
  MlPoly learner(panel.size());
  std::vector<double> losses(panel.size());
  for (std::size_t b = 0; b < panel.rounds(); ++b) {
    const std::vector<double> p = learner.weights();
    Matrix agg = mix(panel, b, p);
    const Matrix& truth = panel.forecasts.front().truths[b];
    for (std::size_t j = 0; j < panel.size(); ++j) losses[j] = block_loss(panel.forecasts[j].predictions[b], truth);
    learner.update(losses, block_loss(agg, truth));
    r.forecast.predictions.push_back(std::move(agg));
    r.weights.weights.push_back(p);
  }
  r.weights.regret = learner.regret();
  r.weights.squared_regret = learner.squared_regret();
  return r;
}

AggregationRule parse_aggregation_rule(std::string_view name) {
  if (name == "uniform") return AggregationRule::kUniform;
  if (name == "mlpoly") return AggregationRule::kMlPoly;
  throw ContractError("aggregation::rule: unknown rule '" + std::string(name) + "' (uniform, mlpoly)");
}

HierarchyLevel parse_hierarchy_level(std::string_view name) {
  if (name == "bottom") return HierarchyLevel::kBottom;
  if (name == "top") return HierarchyLevel::kTop;
  throw ContractError("aggregation::hierarchy: unknown level '" + std::string(name) + "' (bottom, top)");
}

ForecastResult national_total(const ForecastResult& r) {
  ForecastResult out = skeleton(r);
  out.node_ids = {kNationalId};
  out.truths.clear();
  auto total = [](const Matrix& m) {
    Matrix s(1, m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t k = 0; k < m.cols(); ++k) s(0, k) += m(i, k);
    return s;
  };
  for (std::size_t b = 0; b < r.blocks(); ++b) {
    out.predictions.push_back(total(r.predictions[b]));
    out.truths.push_back(total(r.truths[b]));
  }
  return out;
}

HierarchicalResult hierarchical_aggregate(const ExpertPanel& panel, HierarchyLevel level, AggregationRule rule) {
  panel.validate();
  HierarchicalResult out;
  if (level == HierarchyLevel::kTop) {
    ExpertPanel national;
    national.experts = panel.experts;
    for (const auto& f : panel.forecasts) national.forecasts.push_back(national_total(f));
    AggregateResult a = run_rule(national, rule);
    out.national = std::move(a.forecast);
    out.weight_scopes = {kNationalId};
    out.weights.push_back(std::move(a.weights));
    return out;
  }
  const ForecastResult& ref = panel.forecasts.front();
  ForecastResult per_node = skeleton(ref);
  for (std::size_t b = 0; b < ref.blocks(); ++b) per_node.predictions.emplace_back(ref.predictions[b].rows(), ref.predictions[b].cols());
  for (std::size_t v = 0; v < ref.node_ids.size(); ++v) {
    AggregateResult a = run_rule(node_slice(panel, v), rule);
    for (std::size_t b = 0; b < ref.blocks(); ++b)
      for (std::size_t k = 0; k < ref.predictions[b].cols(); ++k) per_node.predictions[b](v, k) = a.forecast.predictions[b](0, k);
    out.weight_scopes.push_back(ref.node_ids[v]);
    out.weights.push_back(std::move(a.weights));
  }
  out.national = national_total(per_node);
  return out;
}

}  // namespace gridattn

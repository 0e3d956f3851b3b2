// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridattn/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "gridattn/csv.hpp"
#include "gridattn/error.hpp"

namespace gridattn {

std::string_view scenario_kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kSingle: return "single";
    case ScenarioKind::kExplicitSwitch: return "explicit";
    case ScenarioKind::kAmbiguousSwitch: return "ambiguous";
  }
  return "unknown";
}

ScenarioKind parse_scenario_kind(std::string_view name) {
  if (name == "single") return ScenarioKind::kSingle;
  if (name == "explicit" || name == "explicit_switch") return ScenarioKind::kExplicitSwitch;
  if (name == "ambiguous" || name == "ambiguous_switch") return ScenarioKind::kAmbiguousSwitch;
  throw ContractError("synthetic::generate_scenario: unknown kind '" + std::string(name) + "'");
}

Matrix random_coupling(std::size_t n, const ScenarioOptions& opts, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(opts.density);
  std::uniform_real_distribution<double> weight(opts.weight_lo, opts.weight_hi);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    Matrix a(n, n);
    for (double& v : a.values())
      if (keep(rng)) v = weight(rng);
    if (rank(a, 1e-9) == n) return a;
  }
  throw NumericError("synthetic::random_coupling: no full-rank draw at density " + std::to_string(opts.density));
}

Matrix apply_coupling(const Matrix& a, const Matrix& x) {
  if (a.cols() != x.rows()) {
    throw DimensionError("synthetic::apply_coupling: A " + a.shape_str() + " cannot act on X " + x.shape_str());
  }
  return matmul(a, x);
}

Scenario generate_scenario(ScenarioKind kind, std::size_t nodes, std::size_t steps, std::uint64_t seed,
                           const ScenarioOptions& opts) {
  if (nodes < 2) throw ContractError("synthetic::generate_scenario: need N >= 2, got " + std::to_string(nodes));
  if (steps < 96) throw ContractError("synthetic::generate_scenario: need T >= 96, got " + std::to_string(steps));
  if (!(opts.density > 0.0 && opts.density <= 1.0)) throw ContractError("synthetic::generate_scenario: density must be in (0, 1]");

  std::mt19937_64 rng(seed);
  Scenario s;
  CouplingScenario& c = s.scenario;
  c.kind = kind;
  c.nodes = nodes;
  c.steps = steps;
  c.seed = seed;
  c.options = opts;
  c.a1 = random_coupling(nodes, opts, rng);
  if (kind != ScenarioKind::kSingle) c.a2 = random_coupling(nodes, opts, rng);

  std::uniform_real_distribution<double> slope(-0.5, 0.5), phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, opts.noise_sd);
  std::vector<double> a(nodes), phi(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    a[i] = slope(rng);
    phi[i] = phase(rng);
  }
  SyntheticPanel& p = s.panel;
  p.x = Matrix(nodes, steps);
  const double t_total = static_cast<double>(steps);
  for (std::size_t i = 0; i < nodes; ++i)
    for (std::size_t t = 0; t < steps; ++t) {
      const double tt = static_cast<double>(t);
      p.x(i, t) = a[i] * tt / t_total + std::sin(2.0 * std::numbers::pi * tt / opts.period + phi[i]) + noise(rng);
    }

  p.regime.assign(steps, 1);
  std::bernoulli_distribution coin(0.5);
  if (kind != ScenarioKind::kSingle)
    for (auto& r : p.regime) r = coin(rng) ? 1 : 2;

  if (kind == ScenarioKind::kExplicitSwitch) {
    p.exogenous = Matrix(1, steps);
    for (std::size_t t = 0; t < steps; ++t) p.exogenous(0, t) = p.regime[t] == 1 ? 1.0 : 0.0;
  } else if (kind == ScenarioKind::kAmbiguousSwitch) {
    // Regime 1 shows (b, b), regime 2 shows (b, 1 - b) with b a fair coin,
    // so each bit alone is independent of the regime.
    p.exogenous = Matrix(2, steps);
    for (std::size_t t = 0; t < steps; ++t) {
      const double b = coin(rng) ? 1.0 : 0.0;
      p.exogenous(0, t) = b;
      p.exogenous(1, t) = p.regime[t] == 1 ? b : 1.0 - b;
    }
  }

  p.y = Matrix(nodes, steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const Matrix& m = p.regime[t] == 1 ? c.a1 : c.a2;
    for (std::size_t i = 0; i < nodes; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < nodes; ++j) acc += m(i, j) * p.x(j, t);
      p.y(i, t) = acc;
    }
  }
  return s;
}

TimePanel to_time_panel(const Scenario& s) {
  const SyntheticPanel& p = s.panel;
  const std::size_t n = p.x.rows(), len = p.x.cols();
  TimePanel out;
  for (std::size_t i = 0; i < n; ++i) out.node_ids.push_back(std::to_string(i));
  out.channel_names.push_back("x");
  out.features.push_back(p.x);
  for (std::size_t e = 0; e < p.exogenous.rows(); ++e) {
    out.channel_names.push_back("exo" + std::to_string(e + 1));
    Matrix ch(n, len);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t t = 0; t < len; ++t) ch(i, t) = p.exogenous(e, t);
    out.features.push_back(std::move(ch));
  }
  out.target = p.y;
  for (std::size_t t = 0; t < len; ++t) out.times.push_back(static_cast<std::int64_t>(t));
  out.step = 1;
  out.calendar = false;
  out.regimes = p.regime;
  out.validate();
  return out;
}

std::string panel_csv(const Scenario& s) {
  const SyntheticPanel& p = s.panel;
  std::ostringstream os;
  os << "t,node_id,x,y,regime";
  for (std::size_t e = 0; e < p.exogenous.rows(); ++e) os << ",exo" << e + 1;
  os << '\n';
  for (std::size_t t = 0; t < p.x.cols(); ++t)
    for (std::size_t i = 0; i < p.x.rows(); ++i) {
      os << t << ',' << i << ',' << format_double(p.x(i, t)) << ',' << format_double(p.y(i, t)) << ',' << p.regime[t];
      for (std::size_t e = 0; e < p.exogenous.rows(); ++e) os << ',' << format_double(p.exogenous(e, t));
      os << '\n';
    }
  return os.str();
}

std::string manifest_text(const CouplingScenario& s) {
  std::ostringstream os;
  os << "kind=" << scenario_kind_name(s.kind) << '\n'
     << "n=" << s.nodes << '\n'
     << "t=" << s.steps << '\n'
     << "seed=" << s.seed << '\n'
     << "density=" << format_double(s.options.density) << '\n'
     << "noise_sd=" << format_double(s.options.noise_sd) << '\n'
     << "period=" << format_double(s.options.period) << '\n';
  return os.str();
}

std::string coupling_csv(const Matrix& a) {
  std::ostringstream os;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) os << (j ? "," : "") << format_double(a(i, j));
    os << '\n';
  }
  return os.str();
}

bool is_synthetic_header(const std::vector<std::string>& header) {
  return header.size() >= 5 && header[0] == "t" && header[1] == "node_id" && header[2] == "x" && header[3] == "y" &&
         header[4] == "regime";
}

TimePanel read_synthetic_csv(const std::filesystem::path& path) {
  const std::string ctx = "synthetic::read_panel";
  CsvTable tab = read_csv(path, ctx);
  if (!is_synthetic_header(tab.header)) throw ContractError(ctx + ": " + path.string() + " is not a synthetic panel");
  const std::size_t exo = tab.header.size() - 5;
  std::map<std::string, std::size_t> index;
  std::vector<std::string> ids;
  std::int64_t max_t = -1;
  for (const auto& r : tab.rows) {
    if (index.emplace(r[1], ids.size()).second) ids.push_back(r[1]);
    max_t = std::max<std::int64_t>(max_t, parse_int(r[0], ctx));
  }
  const std::size_t n = ids.size(), len = static_cast<std::size_t>(max_t + 1);
  if (tab.rows.size() != n * len) throw ContractError(ctx + ": panel " + path.string() + " has missing rows");
  TimePanel p;
  p.node_ids = ids;
  p.channel_names.push_back("x");
  for (std::size_t e = 0; e < exo; ++e) p.channel_names.push_back(tab.header[5 + e]);
  p.features.assign(1 + exo, Matrix(n, len, std::nan("")));
  p.target = Matrix(n, len);
  p.regimes.assign(len, 0);
  for (const auto& r : tab.rows) {
    const auto t = static_cast<std::size_t>(parse_int(r[0], ctx));
    const std::size_t v = index[r[1]];
    if (!std::isnan(p.features[0](v, t))) throw ContractError(ctx + ": duplicate row t=" + r[0] + " node " + r[1]);
    p.features[0](v, t) = parse_double(r[2], ctx);
    p.target(v, t) = parse_double(r[3], ctx);
    p.regimes[t] = static_cast<int>(parse_int(r[4], ctx));
    for (std::size_t e = 0; e < exo; ++e) p.features[1 + e](v, t) = parse_double(r[5 + e], ctx);
  }
  for (std::size_t t = 0; t < len; ++t) p.times.push_back(static_cast<std::int64_t>(t));
  p.step = 1;
  p.calendar = false;
  p.validate();
  return p;
}

TimePanel read_panel_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("forecasting::read_panel: cannot open " + path.string());
  std::string first;
  std::getline(in, first);
  if (!first.empty() && first.back() == '\r') first.pop_back();
  return is_synthetic_header(split_csv_line(first)) ? read_synthetic_csv(path) : read_load_csv(path);
}

}  // namespace gridattn

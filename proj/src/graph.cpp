// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridattn/graph.hpp"

#include <cmath>
#include <iostream>
#include <map>
#include <queue>
#include <sstream>

#include "gridattn/csv.hpp"
#include "gridattn/error.hpp"

namespace gridattn {

WeightedGraph::WeightedGraph(Matrix weights, std::vector<std::string> node_ids)
    : weights_(std::move(weights)), node_ids_(std::move(node_ids)) {
  const std::size_t n = weights_.rows();
  if (weights_.cols() != n) throw DimensionError("graph::WeightedGraph: weights must be square, got " + weights_.shape_str());
  if (node_ids_.empty()) {
    for (std::size_t i = 0; i < n; ++i) node_ids_.push_back(std::to_string(i));
  }
  if (node_ids_.size() != n) throw DimensionError("graph::WeightedGraph: node id count does not match weights");
  for (std::size_t i = 0; i < n; ++i) {
    if (weights_(i, i) != 0.0) throw ContractError("graph::WeightedGraph: nonzero diagonal at node " + node_ids_[i]);
    for (std::size_t j = 0; j < n; ++j) {
      const double w = weights_(i, j);
      if (!std::isfinite(w) || w < 0.0) {
        throw ContractError("graph::WeightedGraph: invalid weight between " + node_ids_[i] + " and " + node_ids_[j]);
      }
      if (std::abs(w - weights_(j, i)) > 1e-12) {
        throw ContractError("graph::WeightedGraph: asymmetric weight between " + node_ids_[i] + " and " + node_ids_[j]);
      }
    }
  }
}

WeightedGraph WeightedGraph::complete(std::size_t n, double weight) {
  Matrix w(n, n, weight);
  for (std::size_t i = 0; i < n; ++i) w(i, i) = 0.0;
  return WeightedGraph(std::move(w));
}

double WeightedGraph::degree(std::size_t v) const {
  double d = 0.0;
  for (double w : weights_.row(v)) d += w;
  return d;
}

std::size_t WeightedGraph::neighbor_count(std::size_t v) const {
  std::size_t c = 0;
  for (double w : weights_.row(v)) c += w > 0.0 ? 1 : 0;
  return c;
}

std::size_t WeightedGraph::edge_count() const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = i + 1; j < size(); ++j) c += weights_(i, j) > 0.0 ? 1 : 0;
  return c;
}

Mask WeightedGraph::neighbor_mask(bool self_loops) const {
  Mask m(size());
  for (std::size_t v = 0; v < size(); ++v) {
    for (std::size_t u = 0; u < size(); ++u)
      if (weights_(v, u) > 0.0) m.set(v, u);
    if (self_loops) m.set(v, v);
  }
  return m;
}

WeightedGraph WeightedGraph::permuted(const std::vector<std::size_t>& perm) const {
  const std::size_t n = size();
  if (perm.size() != n) throw DimensionError("graph::permuted: permutation size mismatch");
  Matrix w(n, n);
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    ids[i] = node_ids_[perm[i]];
    for (std::size_t j = 0; j < n; ++j) w(i, j) = weights_(perm[i], perm[j]);
  }
  return WeightedGraph(std::move(w), std::move(ids));
}

WeightedGraph WeightedGraph::reordered(const std::vector<std::string>& ids) const {
  if (ids.size() != size()) {
    throw ContractError("graph::reordered: graph has " + std::to_string(size()) + " nodes, data has " +
                        std::to_string(ids.size()));
  }
  std::map<std::string, std::size_t> where;
  for (std::size_t i = 0; i < size(); ++i) where[node_ids_[i]] = i;
  std::vector<std::size_t> perm;
  for (const auto& id : ids) {
    auto it = where.find(id);
    if (it == where.end()) throw ContractError("graph::reordered: node " + id + " missing from graph");
    perm.push_back(it->second);
  }
  return permuted(perm);
}

NormalizedOperator sym_normalize(const WeightedGraph& g, bool add_self_loops) {
  const std::size_t n = g.size();
  Matrix a = g.weights();
  if (add_self_loops)
    for (std::size_t i = 0; i < n; ++i) a(i, i) += 1.0;
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (double w : a.row(i)) d += w;
    if (d <= 0.0) throw DegeneracyError("graph::sym_normalize: node " + g.node_ids()[i] + " is isolated");
    inv_sqrt[i] = 1.0 / std::sqrt(d);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) *= inv_sqrt[i] * inv_sqrt[j];
  return {add_self_loops ? OperatorKind::kSymNormSelfLoops : OperatorKind::kSymNormPlain, std::move(a)};
}

namespace {

Matrix normalized_laplacian(const WeightedGraph& g) {
  Matrix adj = sym_normalize(g, false).matrix;
  const std::size_t n = g.size();
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) l(i, j) = (i == j ? 1.0 : 0.0) - adj(i, j);
  return l;
}

double laplacian_lambda_max_impl(const Matrix& l, const LaplacianOptions& opts) {
  const std::size_t n = l.rows();
  // Fixed, non-symmetric start so it is never orthogonal to the top
  // eigenvector of a regular bipartite graph.
  Matrix v(n, 1);
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    v(i, 0) = 1.0 + 0.5 * std::sin(1.0 + 0.7 * static_cast<double>(i));
    norm += v(i, 0) * v(i, 0);
  }
  for (std::size_t i = 0; i < n; ++i) v(i, 0) /= std::sqrt(norm);

  for (int it = 0; it < opts.max_iterations; ++it) {
    Matrix w = matmul(l, v);
    double lambda = 0.0;
    for (std::size_t i = 0; i < n; ++i) lambda += v(i, 0) * w(i, 0);
    double resid = 0.0, wnorm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = w(i, 0) - lambda * v(i, 0);
      resid += r * r;
      wnorm += w(i, 0) * w(i, 0);
    }
    if (std::sqrt(resid) <= opts.tolerance * std::max(1.0, std::abs(lambda))) return lambda;
    if (wnorm == 0.0) break;
    wnorm = std::sqrt(wnorm);
    for (std::size_t i = 0; i < n; ++i) v(i, 0) = w(i, 0) / wnorm;
  }
  std::cerr << "warning: graph::scaled_laplacian: power iteration did not converge, using lambda_max = 2\n";
  return 2.0;
}

}  // namespace

double laplacian_lambda_max(const WeightedGraph& g, const LaplacianOptions& opts) {
  return laplacian_lambda_max_impl(normalized_laplacian(g), opts);
}

NormalizedOperator scaled_laplacian(const WeightedGraph& g, const LaplacianOptions& opts) {
  Matrix l = normalized_laplacian(g);
  const double lambda = laplacian_lambda_max_impl(l, opts);
  const std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) l(i, j) = 2.0 * l(i, j) / lambda - (i == j ? 1.0 : 0.0);
  // Symmetrize away rounding so downstream symmetric checks are exact.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) l(j, i) = l(i, j);
  return {OperatorKind::kScaledLaplacian, std::move(l)};
}

bool is_connected(const Matrix& weights, double threshold) {
  const std::size_t n = weights.rows();
  if (n <= 1) return true;
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!q.empty()) {
    const std::size_t v = q.front();
    q.pop();
    for (std::size_t u = 0; u < n; ++u) {
      if (u == v || seen[u]) continue;
      const double w = weights(v, u);
      if (w > 0.0 && w >= threshold) {
        seen[u] = true;
        ++reached;
        q.push(u);
      }
    }
  }
  return reached == n;
}

bool is_connected(const WeightedGraph& g, double threshold) { return is_connected(g.weights(), threshold); }

namespace {

WeightedGraph graph_from_table(const CsvTable& t, const std::string& where) {
  const std::string ctx = "graph::read_edge_list";
  const std::size_t src = t.column("src", ctx), dst = t.column("dst", ctx), wcol = t.column("weight", ctx);
  std::map<std::string, std::size_t> index;
  std::vector<std::string> ids;
  auto id_of = [&](const std::string& s) {
    auto [it, inserted] = index.emplace(s, ids.size());
    if (inserted) ids.push_back(s);
    return it->second;
  };
  struct Edge { std::size_t a, b; double w; };
  std::vector<Edge> edges;
  for (const auto& row : t.rows) {
    const double w = parse_double(row[wcol], ctx);
    const std::size_t a = id_of(row[src]);
    const std::size_t b = id_of(row[dst]);
    if (a == b) {
      if (w != 0.0) throw ContractError(ctx + ": self-loop on node " + row[src] + " in " + where);
      continue;
    }
    edges.push_back({a, b, w});
  }
  Matrix m(ids.size(), ids.size());
  for (const auto& e : edges) {
    if (m(e.a, e.b) != 0.0) throw ContractError(ctx + ": duplicate edge " + ids[e.a] + "-" + ids[e.b] + " in " + where);
    m(e.a, e.b) = e.w;
    m(e.b, e.a) = e.w;
  }
  return WeightedGraph(std::move(m), std::move(ids));
}

}  // namespace

WeightedGraph read_edge_list(const std::filesystem::path& path) {
  return graph_from_table(read_csv(path, "graph::read_edge_list"), path.string());
}

WeightedGraph graph_from_edge_list_text(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (first) {
      t.header = std::move(f);
      first = false;
    } else {
      if (f.size() != t.header.size()) throw ContractError("graph::read_edge_list: malformed edge line");
      t.rows.push_back(std::move(f));
    }
  }
  return graph_from_table(t, "<embedded>");
}

std::string edge_list_csv(const WeightedGraph& g) {
  std::ostringstream os;
  os << "src,dst,weight\n";
  // Isolated nodes are written as zero-weight self rows so they survive a
  // round trip.
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.neighbor_count(i) == 0) os << g.node_ids()[i] << ',' << g.node_ids()[i] << ",0\n";
    for (std::size_t j = i + 1; j < g.size(); ++j)
      if (g.weight(i, j) > 0.0) os << g.node_ids()[i] << ',' << g.node_ids()[j] << ',' << format_double(g.weight(i, j)) << '\n';
  }
  return os.str();
}

}  // namespace gridattn

// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gridattn/autodiff.hpp"
#include "gridattn/matrix.hpp"

namespace gridattn {

/// Undirected graph stored as a symmetric nonnegative weight matrix with a
/// zero diagonal. Node u is a neighbour of v iff weights(u, v) > 0.
class WeightedGraph {
 public:
  WeightedGraph() = default;
  /// Validates symmetry (1e-12), nonnegativity and a zero diagonal. Empty
  /// `node_ids` are replaced by "0", "1", ...
  explicit WeightedGraph(Matrix weights, std::vector<std::string> node_ids = {});

  static WeightedGraph complete(std::size_t n, double weight = 1.0);

  std::size_t size() const { return weights_.rows(); }
  const Matrix& weights() const { return weights_; }
  double weight(std::size_t u, std::size_t v) const { return weights_(u, v); }
  const std::vector<std::string>& node_ids() const { return node_ids_; }

  double degree(std::size_t v) const;
  std::size_t neighbor_count(std::size_t v) const;
  std::size_t edge_count() const;

  /// Mask with mask(v, u) = 1 for u in N(v), plus the diagonal when requested.
  Mask neighbor_mask(bool self_loops) const;

  /// Same graph with nodes relabelled so new node i is old node perm[i].
  WeightedGraph permuted(const std::vector<std::size_t>& perm) const;

  /// Same graph with nodes ordered as `ids`; every id must be present.
  WeightedGraph reordered(const std::vector<std::string>& ids) const;

 private:
  Matrix weights_;
  std::vector<std::string> node_ids_;
};

enum class OperatorKind { kSymNormSelfLoops, kSymNormPlain, kScaledLaplacian };

struct NormalizedOperator {
  OperatorKind kind;
  Matrix matrix;
};

/// D^{-1/2} (W [+ I]) D^{-1/2} with D the weighted degree of W [+ I].
NormalizedOperator sym_normalize(const WeightedGraph& g, bool add_self_loops);

struct LaplacianOptions {
  double tolerance = 1e-9;
  int max_iterations = 10000;
};

/// 2 L_sym / lambda_max - I where L_sym = I - D^{-1/2} W D^{-1/2}. lambda_max
/// comes from power iteration; on non-convergence a warning is printed and
/// lambda_max = 2 is used.
NormalizedOperator scaled_laplacian(const WeightedGraph& g, const LaplacianOptions& opts = {});

/// Largest eigenvalue of the symmetric normalized Laplacian by power
/// iteration. Returns 2.0 (with a warning) if the iteration does not converge.
double laplacian_lambda_max(const WeightedGraph& g, const LaplacianOptions& opts = {});

/// Breadth-first reachability over edges with weight > 0 and >= threshold.
bool is_connected(const WeightedGraph& g, double threshold);
/// Same as above on a raw square matrix; the diagonal is ignored.
bool is_connected(const Matrix& weights, double threshold);

/// Edge list CSV: header `src,dst,weight`, each undirected edge once.
WeightedGraph read_edge_list(const std::filesystem::path& path);
std::string edge_list_csv(const WeightedGraph& g);
WeightedGraph graph_from_edge_list_text(const std::string& text);

}  // namespace gridattn

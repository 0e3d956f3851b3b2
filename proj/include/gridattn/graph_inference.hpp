// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gridattn/graph.hpp"
#include "gridattn/matrix.hpp"

namespace gridattn {

enum class SimilarityKind { kGeodesicKernel, kDtw, kCorrelation, kPrecision };

struct SimilarityMatrix {
  Matrix values;  // symmetric, n x n
  SimilarityKind kind;
};

struct GeoPoint {
  double lat_deg;
  double lon_deg;
};

inline constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle distance in km (haversine).
double haversine_km(const GeoPoint& a, const GeoPoint& b);

double median(std::vector<double> values);

/// exp(-dist^2 / sigma^2) with sigma the median pairwise great-circle
/// distance. Requires at least two nodes.
SimilarityMatrix geodesic_kernel_matrix(std::span<const GeoPoint> coords);

/// Largest edge weight lambda such that keeping entries >= lambda leaves the
/// graph connected. Throws InferenceError if the full graph is disconnected.
double minimal_connectivity_threshold(const Matrix& similarity);
inline double minimal_connectivity_threshold(const SimilarityMatrix& s) {
  return minimal_connectivity_threshold(s.values);
}

/// Keeps off-diagonal entries >= the minimal-connectivity threshold.
WeightedGraph similarity_to_graph(const SimilarityMatrix& s, std::vector<std::string> node_ids = {});

using WarpPath = std::vector<std::pair<std::size_t, std::size_t>>;

struct DtwResult {
  double distance;
  WarpPath path;
};

/// Full dynamic-programming DTW with absolute-difference local cost.
DtwResult dtw_exact(std::span<const double> x, std::span<const double> y);

/// Multiresolution approximation: coarsen by pair averaging, recurse, project
/// the coarse path back and refine inside a band of `radius` cells.
DtwResult fast_dtw(std::span<const double> x, std::span<const double> y, std::size_t radius);

/// Pairwise FastDTW distances between the rows of `series` (n x T).
/// Symmetric with a zero diagonal.
Matrix dtw_distances(const Matrix& series, std::size_t radius = 1);

/// dtw_distances kernelized as exp(-d^2 / sigma^2), sigma the median
/// off-diagonal distance.
SimilarityMatrix dtw_matrix(const Matrix& series, std::size_t radius = 1);

/// Pearson correlation of the rows of `series`. Throws DegeneracyError for a
/// constant row.
Matrix pearson_correlation(const Matrix& series);

/// |correlation| of per-node min-max normalized rows.
SimilarityMatrix correlation_matrix(const Matrix& series);

/// Unbiased sample covariance of the rows of `series`.
Matrix covariance(const Matrix& series);

/// inverse(cov + ridge * (trace(cov) / n) * I).
Matrix precision_from_covariance(const Matrix& cov, double ridge);
Matrix precision(const Matrix& series, double ridge = 1e-3);

/// |off-diagonal precision| rescaled so the largest entry is 1; diagonal 1.
SimilarityMatrix precision_matrix(const Matrix& series, double ridge = 1e-3);

}  // namespace gridattn

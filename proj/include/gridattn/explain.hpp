// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridattn/forecasting.hpp"
#include "gridattn/matrix.hpp"

namespace gridattn {

struct TraceRecord {
  std::size_t window = 0;  // index into the panel's windows
  std::size_t layer = 0;
  std::size_t head = 0;
  int label = 0;           // regime (synthetic) or season bucket
  Matrix alpha;            // n x n
};

struct AttentionTrace {
  std::vector<std::string> node_ids;
  std::vector<std::string> label_names;  // label value -> name
  std::vector<TraceRecord> records;

  std::size_t layers() const;
  std::size_t heads(std::size_t layer) const;
  /// Records of one (layer, head), flattened row-major: one row per window.
  Matrix vectors(std::size_t layer, std::size_t head) const;
  std::vector<int> labels(std::size_t layer, std::size_t head) const;
  std::vector<std::size_t> windows(std::size_t layer, std::size_t head) const;
};

/// Meteorological season of a calendar time: 0 DJF, 1 MAM, 2 JJA, 3 SON.
int season_of(std::int64_t minutes);
inline const std::vector<std::string> kSeasonNames = {"DJF", "MAM", "JJA", "SON"};

/// Runs the model over `windows` and keeps every attention matrix. Labels
/// are regimes when the panel has them, seasons of the target day otherwise.
AttentionTrace collect_attention_trace(const TrainedModel& trained, const TimePanel& panel,
                                       const std::vector<std::size_t>& windows);
AttentionTrace trace_from_forecast(const ForecastResult& r, const std::vector<std::size_t>& windows, bool regimes);

/// `window,layer,head,src,dst,alpha`; src is the attended node u, dst the
/// updated node v. Only neighbourhood entries are written.
std::string trace_csv(const AttentionTrace& trace, const Mask& neighbourhood);

struct SymmetricEigen {
  std::vector<double> values;  // descending
  Matrix vectors;              // column j pairs with values[j]
  int sweeps = 0;
};

/// Cyclic Jacobi rotations until the off-diagonal norm falls below
/// tol * max(1, ||A||_F).
SymmetricEigen jacobi_eigen(const Matrix& a, double tol = 1e-10, int max_sweeps = 100);

struct Projection {
  Matrix components;                   // k x dim, orthonormal rows
  std::vector<double> explained_ratio; // k, nonincreasing
  Matrix coords;                       // records x k
  std::vector<double> mean;            // dim
};

/// Centres the rows of `data` (records x dim) and projects them on the top-k
/// eigenvectors of their covariance.
Projection pca_project(const Matrix& data, std::size_t k);

struct KMeansResult {
  std::vector<std::size_t> assignment;
  Matrix centroids;
  double inertia = 0.0;
};

/// Lloyd iterations from k-means++ seeds, best of `restarts` by inertia.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t restarts = 50,
                    std::size_t max_iter = 300);

/// Fraction of points whose cluster's majority label equals their own.
double purity(const std::vector<std::size_t>& assignment, const std::vector<int>& labels);
double cluster_purity(const Matrix& coords, const std::vector<int>& labels, std::size_t clusters,
                      std::uint64_t seed = 0, std::size_t restarts = 50);

/// `window,layer,head,pc1,pc2,label`
std::string projection_csv(const Projection& p, const std::vector<std::size_t>& windows, std::size_t layer,
                           std::size_t head, const std::vector<int>& labels, const std::vector<std::string>& names);

/// Standalone SVG scatter of the first two coordinates, coloured by label.
std::string scatter_svg(const Projection& p, const std::vector<int>& labels, const std::vector<std::string>& names,
                        const std::string& title);

}  // namespace gridattn

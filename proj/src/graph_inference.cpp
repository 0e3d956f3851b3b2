// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridattn/graph_inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "gridattn/error.hpp"

namespace gridattn {

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double phi1 = a.lat_deg * kDeg, phi2 = b.lat_deg * kDeg;
  const double dphi = phi2 - phi1;
  const double dlambda = (b.lon_deg - a.lon_deg) * kDeg;
  const double s = std::sin(dphi / 2.0);
  const double t = std::sin(dlambda / 2.0);
  const double h = std::clamp(s * s + std::cos(phi1) * std::cos(phi2) * t * t, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

double median(std::vector<double> values) {
  if (values.empty()) throw ContractError("graph_inference::median: no values");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

namespace {

// exp(-d^2 / sigma^2) with sigma the median off-diagonal distance. A zero
// bandwidth maps coincident pairs to 1 and everything else to 0.
Matrix kernelize(const Matrix& dist) {
  const std::size_t n = dist.rows();
  std::vector<double> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.push_back(dist(i, j));
  const double sigma = median(pairs);
  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = dist(i, j);
      if (sigma > 0.0) {
        k(i, j) = std::exp(-(d * d) / (sigma * sigma));
      } else {
        k(i, j) = d == 0.0 ? 1.0 : 0.0;
      }
    }
  }
  return k;
}

}  // namespace

SimilarityMatrix geodesic_kernel_matrix(std::span<const GeoPoint> coords) {
  const std::size_t n = coords.size();
  if (n < 2) throw ContractError("graph_inference::geodesic_kernel_matrix: need at least 2 nodes");
  for (const auto& c : coords) {
    if (!std::isfinite(c.lat_deg) || !std::isfinite(c.lon_deg) || std::abs(c.lat_deg) > 90.0 ||
        std::abs(c.lon_deg) > 360.0) {
      throw ContractError("graph_inference::geodesic_kernel_matrix: invalid coordinate");
    }
  }
  Matrix dist(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dist(i, j) = dist(j, i) = haversine_km(coords[i], coords[j]);
  return {kernelize(dist), SimilarityKind::kGeodesicKernel};
}

double minimal_connectivity_threshold(const Matrix& s) {
  const std::size_t n = s.rows();
  if (s.cols() != n) throw DimensionError("graph_inference::minimal_connectivity_threshold: non-square " + s.shape_str());
  if (n <= 1) return 0.0;
  std::vector<double> weights;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && s(i, j) > 0.0) weights.push_back(s(i, j));
  std::sort(weights.begin(), weights.end());
  weights.erase(std::unique(weights.begin(), weights.end()), weights.end());
  if (weights.empty() || !is_connected(s, weights.front())) {
    throw InferenceError("graph_inference::minimal_connectivity_threshold: similarity graph is disconnected");
  }
  // Connectivity is monotone in the threshold: find the last connected index.
  std::size_t lo = 0, hi = weights.size() - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    if (is_connected(s, weights[mid])) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return weights[lo];
}

WeightedGraph similarity_to_graph(const SimilarityMatrix& s, std::vector<std::string> node_ids) {
  if (!is_symmetric(s.values, 1e-9)) throw ContractError("graph_inference::similarity_to_graph: matrix is not symmetric");
  const double lambda = minimal_connectivity_threshold(s.values);
  const std::size_t n = s.values.rows();
  Matrix w(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (s.values(i, j) + s.values(j, i));
      if (v > 0.0 && s.values(i, j) >= lambda && s.values(j, i) >= lambda) w(i, j) = w(j, i) = v;
    }
  }
  return WeightedGraph(std::move(w), std::move(node_ids));
}

namespace {

// Per-row inclusive column range [lo, hi] of a search window.
struct Band {
  std::vector<std::size_t> lo, hi;
};

DtwResult dtw_in_band(std::span<const double> x, std::span<const double> y, const Band& band) {
  const std::size_t n = x.size(), m = y.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> offset(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offset[i + 1] = offset[i] + (band.hi[i] - band.lo[i] + 1);
  std::vector<double> cost(offset[n], kInf);
  auto at = [&](std::size_t i, std::size_t j) -> double {
    if (j < band.lo[i] || j > band.hi[i]) return kInf;
    return cost[offset[i] + (j - band.lo[i])];
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = band.lo[i]; j <= band.hi[i]; ++j) {
      const double local = std::abs(x[i] - y[j]);
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = kInf;
        if (i > 0 && j > 0) best = std::min(best, at(i - 1, j - 1));
        if (i > 0) best = std::min(best, at(i - 1, j));
        if (j > 0) best = std::min(best, at(i, j - 1));
      }
      cost[offset[i] + (j - band.lo[i])] = local + best;
    }
  }
  DtwResult r{at(n - 1, m - 1), {}};
  if (!std::isfinite(r.distance)) throw NumericError("graph_inference::dtw: search window does not connect the endpoints");
  std::size_t i = n - 1, j = m - 1;
  r.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = at(i - 1, j - 1), up = at(i - 1, j), left = at(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    r.path.emplace_back(i, j);
  }
  std::reverse(r.path.begin(), r.path.end());
  return r;
}

std::vector<double> halve(std::span<const double> x) {
  std::vector<double> out;
  out.reserve(x.size() / 2);
  for (std::size_t i = 0; i + 1 < x.size(); i += 2) out.push_back(0.5 * (x[i] + x[i + 1]));
  return out;
}

// Projects a coarse path to the fine grid, widened by `radius` coarse cells.
Band expand_window(const WarpPath& coarse, std::size_t n, std::size_t m, std::size_t radius) {
  Band band{std::vector<std::size_t>(n, m), std::vector<std::size_t>(n, 0)};
  std::vector<bool> touched(n, false);
  const auto r = static_cast<long long>(radius);
  for (const auto& [ci, cj] : coarse) {
    for (long long a = -r; a <= r; ++a) {
      const long long i = static_cast<long long>(ci) + a;
      if (i < 0) continue;
      const long long j_lo = std::max(0LL, static_cast<long long>(cj) - r);
      const long long j_hi = static_cast<long long>(cj) + r;
      for (long long fi = 2 * i; fi <= 2 * i + 1; ++fi) {
        if (fi >= static_cast<long long>(n)) continue;
        const auto row = static_cast<std::size_t>(fi);
        const auto lo = static_cast<std::size_t>(std::min<long long>(2 * j_lo, static_cast<long long>(m) - 1));
        const auto hi = static_cast<std::size_t>(std::min<long long>(2 * j_hi + 1, static_cast<long long>(m) - 1));
        band.lo[row] = std::min(band.lo[row], lo);
        band.hi[row] = std::max(band.hi[row], hi);
        touched[row] = true;
      }
    }
  }
  // Rows beyond the coarse grid (odd lengths) inherit their neighbour's
  // range; then force a monotone band that contains both corners.
  for (std::size_t i = 0; i < n; ++i) {
    if (!touched[i]) {
      band.lo[i] = i > 0 ? band.lo[i - 1] : 0;
      band.hi[i] = i > 0 ? band.hi[i - 1] : 0;
    }
  }
  band.lo[0] = 0;
  band.hi[n - 1] = m - 1;
  for (std::size_t i = 1; i < n; ++i) {
    band.hi[i] = std::max(band.hi[i], band.hi[i - 1]);
    band.lo[i] = std::max(band.lo[i], band.lo[i - 1]);
    band.lo[i] = std::min(band.lo[i], band.hi[i - 1] + 1);
    band.lo[i] = std::min(band.lo[i], band.hi[i]);
  }
  return band;
}

}  // namespace

DtwResult dtw_exact(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw ContractError("graph_inference::dtw: empty series");
  Band band{std::vector<std::size_t>(x.size(), 0), std::vector<std::size_t>(x.size(), y.size() - 1)};
  return dtw_in_band(x, y, band);
}

DtwResult fast_dtw(std::span<const double> x, std::span<const double> y, std::size_t radius) {
  if (x.empty() || y.empty()) throw ContractError("graph_inference::fast_dtw: empty series");
  const std::size_t min_size = radius + 2;
  if (x.size() < min_size || y.size() < min_size) return dtw_exact(x, y);
  const auto xs = halve(x);
  const auto ys = halve(y);
  const DtwResult coarse = fast_dtw(xs, ys, radius);
  return dtw_in_band(x, y, expand_window(coarse.path, x.size(), y.size(), radius));
}

Matrix dtw_distances(const Matrix& series, std::size_t radius) {
  const std::size_t n = series.rows();
  if (series.cols() < 2) throw ContractError("graph_inference::dtw_matrix: series need at least 2 steps");
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d(i, j) = d(j, i) = fast_dtw(series.row(i), series.row(j), radius).distance;
  return d;
}

SimilarityMatrix dtw_matrix(const Matrix& series, std::size_t radius) {
  if (series.rows() < 2) throw ContractError("graph_inference::dtw_matrix: need at least 2 nodes");
  return {kernelize(dtw_distances(series, radius)), SimilarityKind::kDtw};
}

Matrix pearson_correlation(const Matrix& series) {
  const std::size_t n = series.rows(), t = series.cols();
  if (t < 2) throw ContractError("graph_inference::correlation_matrix: series need at least 2 steps");
  std::vector<std::vector<double>> centered(n, std::vector<double>(t));
  std::vector<double> norm(n);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (double v : series.row(i)) mean += v;
    mean /= static_cast<double>(t);
    double ss = 0.0;
    for (std::size_t k = 0; k < t; ++k) {
      centered[i][k] = series(i, k) - mean;
      ss += centered[i][k] * centered[i][k];
    }
    if (ss <= 0.0) throw DegeneracyError("graph_inference::correlation_matrix: node " + std::to_string(i) + " has constant series");
    norm[i] = std::sqrt(ss);
  }
  Matrix c(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    c(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < t; ++k) s += centered[i][k] * centered[j][k];
      c(i, j) = c(j, i) = std::clamp(s / (norm[i] * norm[j]), -1.0, 1.0);
    }
  }
  return c;
}

SimilarityMatrix correlation_matrix(const Matrix& series) {
  Matrix normalized = series;
  for (std::size_t i = 0; i < series.rows(); ++i) {
    auto row = normalized.row(i);
    const auto [mn, mx] = std::minmax_element(row.begin(), row.end());
    const double lo = *mn, span = *mx - *mn;
    if (span <= 0.0) throw DegeneracyError("graph_inference::correlation_matrix: node " + std::to_string(i) + " has constant series");
    for (double& v : row) v = (v - lo) / span;
  }
  Matrix c = pearson_correlation(normalized);
  for (double& v : c.values()) v = std::abs(v);
  return {std::move(c), SimilarityKind::kCorrelation};
}

Matrix covariance(const Matrix& series) {
  const std::size_t n = series.rows(), t = series.cols();
  if (t < 2) throw ContractError("graph_inference::precision_matrix: need T > 1");
  std::vector<double> mean(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (double v : series.row(i)) mean[i] += v;
    mean[i] /= static_cast<double>(t);
  }
  Matrix cov(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < t; ++k) s += (series(i, k) - mean[i]) * (series(j, k) - mean[j]);
      cov(i, j) = cov(j, i) = s / static_cast<double>(t - 1);
    }
  }
  return cov;
}

Matrix precision_from_covariance(const Matrix& cov, double ridge) {
  if (ridge < 0.0) throw ContractError("graph_inference::precision_matrix: ridge must be nonnegative");
  const std::size_t n = cov.rows();
  Matrix reg = cov;
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += cov(i, i);
  for (std::size_t i = 0; i < n; ++i) reg(i, i) += ridge * trace / static_cast<double>(n);
  try {
    Matrix p = inverse(reg);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) p(i, j) = p(j, i) = 0.5 * (p(i, j) + p(j, i));
    return p;
  } catch (const NumericError&) {
    throw NumericError("graph_inference::precision_matrix: covariance is singular after ridging");
  }
}

Matrix precision(const Matrix& series, double ridge) { return precision_from_covariance(covariance(series), ridge); }

SimilarityMatrix precision_matrix(const Matrix& series, double ridge) {
  const Matrix p = precision(series, ridge);
  const std::size_t n = p.rows();
  double mx = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) mx = std::max(mx, std::abs(p(i, j)));
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    s(i, i) = 1.0;
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) s(i, j) = mx > 0.0 ? std::abs(p(i, j)) / mx : 0.0;
  }
  return {std::move(s), SimilarityKind::kPrecision};
}

}  // namespace gridattn

// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridattn/explain.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "gridattn/csv.hpp"
#include "gridattn/error.hpp"

namespace gridattn {

std::size_t AttentionTrace::layers() const {
  std::size_t n = 0;
  for (const auto& r : records) n = std::max(n, r.layer + 1);
  return n;
}

std::size_t AttentionTrace::heads(std::size_t layer) const {
  std::size_t n = 0;
  for (const auto& r : records)
    if (r.layer == layer) n = std::max(n, r.head + 1);
  return n;
}

Matrix AttentionTrace::vectors(std::size_t layer, std::size_t head) const {
  std::vector<const TraceRecord*> sel;
  for (const auto& r : records)
    if (r.layer == layer && r.head == head) sel.push_back(&r);
  if (sel.empty()) {
    throw ContractError("explain::trace: no records for layer " + std::to_string(layer) + " head " + std::to_string(head));
  }
  const std::size_t dim = sel.front()->alpha.size();
  Matrix out(sel.size(), dim);
  for (std::size_t i = 0; i < sel.size(); ++i) std::copy(sel[i]->alpha.values().begin(), sel[i]->alpha.values().end(), out.row(i).begin());
  return out;
}

std::vector<int> AttentionTrace::labels(std::size_t layer, std::size_t head) const {
  std::vector<int> out;
  for (const auto& r : records)
    if (r.layer == layer && r.head == head) out.push_back(r.label);
  return out;
}

std::vector<std::size_t> AttentionTrace::windows(std::size_t layer, std::size_t head) const {
  std::vector<std::size_t> out;
  for (const auto& r : records)
    if (r.layer == layer && r.head == head) out.push_back(r.window);
  return out;
}

int season_of(std::int64_t minutes) {
  const std::int64_t day = minutes >= 0 ? minutes / 1440 : -((-minutes + 1439) / 1440);
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{day}}};
  const unsigned m = static_cast<unsigned>(ymd.month());
  return static_cast<int>((m % 12) / 3);
}

AttentionTrace trace_from_forecast(const ForecastResult& r, const std::vector<std::size_t>& windows, bool regimes) {
  if (windows.size() != r.blocks()) throw DimensionError("explain::collect_attention_trace: window count mismatch");
  AttentionTrace t;
  t.node_ids = r.node_ids;
  t.label_names = regimes ? std::vector<std::string>{"", "A1", "A2"} : kSeasonNames;
  for (std::size_t b = 0; b < r.blocks(); ++b) {
    const int label = regimes ? r.regimes[b] : season_of(r.starts[b]);
    for (const auto& snap : r.attention[b]) t.records.push_back({windows[b], snap.layer, snap.head, label, snap.alpha});
  }
  return t;
}

AttentionTrace collect_attention_trace(const TrainedModel& trained, const TimePanel& panel,
                                       const std::vector<std::size_t>& windows) {
  if (!trained.model.has_attention()) {
    throw ContractError("explain::collect_attention_trace: model has no attention layer");
  }
  const ForecastResult r = predict(trained, panel, windows);
  return trace_from_forecast(r, windows, !panel.regimes.empty());
}

std::string trace_csv(const AttentionTrace& trace, const Mask& nb) {
  std::ostringstream os;
  os << "window,layer,head,src,dst,alpha\n";
  for (const auto& r : trace.records) {
    const std::size_t n = r.alpha.rows();
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t u = 0; u < n; ++u)
        if (nb(v, u)) {
          os << r.window << ',' << r.layer << ',' << r.head << ',' << trace.node_ids[u] << ',' << trace.node_ids[v] << ','
             << format_double(r.alpha(v, u)) << '\n';
        }
  }
  return os.str();
}

SymmetricEigen jacobi_eigen(const Matrix& input, double tol, int max_sweeps) {
  const std::size_t n = input.rows();
  if (input.cols() != n) throw DimensionError("explain::jacobi_eigen: matrix must be square, got " + input.shape_str());
  if (!is_symmetric(input, 1e-9 * std::max(1.0, max_abs(input)))) throw ContractError("explain::jacobi_eigen: matrix not symmetric");
  Matrix a = input;
  Matrix v = Matrix::identity(n);
  double frob = 0.0;
  for (double x : a.values()) frob += x * x;
  const double threshold = tol * std::max(1.0, std::sqrt(frob));
  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) s += 2.0 * a(p, q) * a(p, q);
    return std::sqrt(s);
  };
  SymmetricEigen out;
  while (off_norm() > threshold) {
    if (out.sweeps >= max_sweeps) throw NumericError("explain::jacobi_eigen: no convergence after " + std::to_string(max_sweeps) + " sweeps");
    ++out.sweeps;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
  out.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values.push_back(a(order[j], order[j]));
    // Deterministic sign: largest-magnitude component positive.
    std::size_t arg = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(v(k, order[j])) > std::abs(v(arg, order[j]))) arg = k;
    const double sign = v(arg, order[j]) < 0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = sign * v(k, order[j]);
  }
  return out;
}

Projection pca_project(const Matrix& data, std::size_t k) {
  const std::size_t m = data.rows(), dim = data.cols();
  if (m < 2) throw ContractError("explain::pca_project: need at least 2 records, got " + std::to_string(m));
  if (k == 0 || k > dim) {
    throw ContractError("explain::pca_project: k=" + std::to_string(k) + " outside [1, " + std::to_string(dim) + "]");
  }
  Projection p;
  p.mean.assign(dim, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < dim; ++j) p.mean[j] += data(i, j);
  for (double& x : p.mean) x /= static_cast<double>(m);
  Matrix centred(m, dim);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < dim; ++j) centred(i, j) = data(i, j) - p.mean[j];
  Matrix cov = matmul(transpose(centred), centred);
  for (double& x : cov.values()) x /= static_cast<double>(m - 1);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i + 1; j < dim; ++j) cov(j, i) = cov(i, j);

  const SymmetricEigen eig = jacobi_eigen(cov);
  double total = 0.0;
  for (double l : eig.values) total += std::max(l, 0.0);
  p.components = Matrix(k, dim);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < dim; ++j) p.components(c, j) = eig.vectors(j, c);
    p.explained_ratio.push_back(total > 0.0 ? std::max(eig.values[c], 0.0) / total : 0.0);
  }
  p.coords = matmul(centred, transpose(p.components));
  return p;
}

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

KMeansResult lloyd(const Matrix& pts, std::size_t k, std::mt19937_64& rng, std::size_t max_iter) {
  const std::size_t m = pts.rows(), d = pts.cols();
  Matrix c(k, d);
  std::uniform_int_distribution<std::size_t> pick(0, m - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> best_d(m, std::numeric_limits<double>::infinity());
  std::size_t first = pick(rng);
  std::copy(pts.row(first).begin(), pts.row(first).end(), c.row(0).begin());
  for (std::size_t j = 1; j < k; ++j) {
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      best_d[i] = std::min(best_d[i], sq_dist(pts.row(i), c.row(j - 1)));
      total += best_d[i];
    }
    std::size_t chosen = pick(rng);
    if (total > 0.0) {
      double r = unit(rng) * total;
      for (std::size_t i = 0; i < m; ++i) {
        r -= best_d[i];
        if (r <= 0.0) {
          chosen = i;
          break;
        }
      }
    }
    std::copy(pts.row(chosen).begin(), pts.row(chosen).end(), c.row(j).begin());
  }

  KMeansResult res;
  res.assignment.assign(m, k);
  for (std::size_t it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t arg = 0;
      double bd = sq_dist(pts.row(i), c.row(0));
      for (std::size_t j = 1; j < k; ++j) {
        const double dd = sq_dist(pts.row(i), c.row(j));
        if (dd < bd) {
          bd = dd;
          arg = j;
        }
      }
      if (res.assignment[i] != arg) {
        res.assignment[i] = arg;
        changed = true;
      }
    }
    if (!changed) break;
    Matrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < m; ++i) {
      ++counts[res.assignment[i]];
      for (std::size_t q = 0; q < d; ++q) sums(res.assignment[i], q) += pts(i, q);
    }
    for (std::size_t j = 0; j < k; ++j)
      if (counts[j] > 0)
        for (std::size_t q = 0; q < d; ++q) c(j, q) = sums(j, q) / static_cast<double>(counts[j]);
  }
  for (std::size_t i = 0; i < m; ++i) res.inertia += sq_dist(pts.row(i), c.row(res.assignment[i]));
  res.centroids = std::move(c);
  return res;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t restarts, std::size_t max_iter) {
  if (k == 0) throw ContractError("explain::kmeans: need k >= 1");
  if (points.rows() < k) {
    throw ContractError("explain::cluster_purity: " + std::to_string(points.rows()) + " records for " + std::to_string(k) +
                        " clusters");
  }
  std::mt19937_64 rng(seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
    KMeansResult cur = lloyd(points, k, rng, max_iter);
    if (cur.inertia < best.inertia) best = std::move(cur);
  }
  return best;
}

double purity(const std::vector<std::size_t>& assignment, const std::vector<int>& labels) {
  if (assignment.size() != labels.size() || labels.empty()) throw DimensionError("explain::purity: labels do not align with records");
  std::map<std::size_t, std::map<int, std::size_t>> counts;
  for (std::size_t i = 0; i < labels.size(); ++i) ++counts[assignment[i]][labels[i]];
  std::size_t hit = 0;
  for (const auto& [cluster, by_label] : counts) {
    std::size_t best = 0;
    for (const auto& [label, c] : by_label) best = std::max(best, c);
    hit += best;
  }
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

double cluster_purity(const Matrix& coords, const std::vector<int>& labels, std::size_t clusters, std::uint64_t seed,
                      std::size_t restarts) {
  if (coords.rows() != labels.size()) throw DimensionError("explain::cluster_purity: labels do not align with records");
  return purity(kmeans(coords, clusters, seed, restarts).assignment, labels);
}

std::string projection_csv(const Projection& p, const std::vector<std::size_t>& windows, std::size_t layer,
                           std::size_t head, const std::vector<int>& labels, const std::vector<std::string>& names) {
  std::ostringstream os;
  os << "window,layer,head,pc1,pc2,label\n";
  for (std::size_t i = 0; i < p.coords.rows(); ++i) {
    const double pc2 = p.coords.cols() > 1 ? p.coords(i, 1) : 0.0;
    const auto li = static_cast<std::size_t>(labels[i]);
    os << windows[i] << ',' << layer << ',' << head << ',' << format_double(p.coords(i, 0)) << ',' << format_double(pc2) << ','
       << (li < names.size() && !names[li].empty() ? names[li] : std::to_string(labels[i])) << '\n';
  }
  return os.str();
}

std::string scatter_svg(const Projection& p, const std::vector<int>& labels, const std::vector<std::string>& names,
                        const std::string& title) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  const double w = 480, h = 480, pad = 40;
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  for (std::size_t i = 0; i < p.coords.rows(); ++i) {
    const double x = p.coords(i, 0), y = p.coords.cols() > 1 ? p.coords(i, 1) : 0.0;
    if (i == 0) {
      x0 = x1 = x;
      y0 = y1 = y;
    }
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  const double sx = x1 > x0 ? (w - 2 * pad) / (x1 - x0) : 1.0, sy = y1 > y0 ? (h - 2 * pad) / (y1 - y0) : 1.0;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << pad << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  for (std::size_t i = 0; i < p.coords.rows(); ++i) {
    const double x = pad + (p.coords(i, 0) - x0) * sx;
    const double y = h - pad - ((p.coords.cols() > 1 ? p.coords(i, 1) : 0.0) - y0) * sy;
    const auto li = static_cast<std::size_t>(std::max(labels[i], 0));
    os << "<circle cx=\"" << format_double(std::round(x * 10) / 10) << "\" cy=\"" << format_double(std::round(y * 10) / 10)
       << "\" r=\"2\" fill=\"" << palette[li % 6] << "\" fill-opacity=\"0.6\"/>\n";
  }
  std::size_t row = 0;
  for (std::size_t li = 0; li < names.size(); ++li) {
    if (names[li].empty() || std::find(labels.begin(), labels.end(), static_cast<int>(li)) == labels.end()) continue;
    os << "<text x=\"" << w - 90 << "\" y=\"" << 24 + 16 * row++ << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
       << palette[li % 6] << "\">" << names[li] << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace gridattn

// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

// Measurements shared by the convolution unit tests and the acceptance run.

#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "gridattn/layers.hpp"
#include "helpers.hpp"

namespace gridattn::testing {

inline LayerConfig small_layer(LayerKind kind, std::size_t in_dim = 3) {
  LayerConfig c;
  c.kind = kind;
  c.in_dim = in_dim;
  c.out_dim = kind == LayerKind::kAppnp ? in_dim : 2;
  c.heads = is_attention(kind) ? 2 : 1;
  c.hops = kind == LayerKind::kCheb ? 3 : 2;
  c.teleport = 0.3;
  c.activation = kind == LayerKind::kAppnp ? Activation::kIdentity : Activation::kRelu;
  return c;
}

/// Worst relative error, over every parameter group, between the tape
/// gradient of mean((layer(H) - Y)^2) and central differences.
inline double layer_gradient_error(LayerKind kind, std::uint64_t seed, std::size_t n = 6) {
  std::mt19937_64 rng(seed);
  const LayerConfig cfg = small_layer(kind);
  const WeightedGraph g = random_graph(n, rng);
  const GraphOperators ops(g, {kind}, cfg.gcn_self_loops);
  LayerParams params = init_layer_params(cfg, rng);
  // Nonzero biases so every group has a generic gradient.
  for (auto& [name, t] : params.groups)
    if (name.find("bias") != std::string::npos) t.mutable_value() = random_matrix(t.rows(), t.cols(), rng, -0.2, 0.2);
  const DiffTensor h = DiffTensor::constant(random_matrix(n, cfg.in_dim, rng));
  const DiffTensor y = DiffTensor::constant(random_matrix(n, cfg.output_width(), rng));
  auto loss = [&](Tape& tape) {
    DiffTensor e = tape.sub(layer_forward(tape, h, ops, params, cfg), y);
    return tape.mean(tape.mul(e, e));
  };
  Tape tape;
  tape.backward(loss(tape));
  auto tensors = params.tensors();
  const auto fd = finite_difference_gradient(
      [&] {
        Tape t;
        t.set_recording(false);
        return loss(t).value()(0, 0);
      },
      tensors);
  double worst = 0.0;
  for (std::size_t i = 0; i < tensors.size(); ++i) worst = std::max(worst, relative_error(tensors[i].grad(), fd[i]));
  return worst;
}

/// Worst |row sum - 1| over every snapshot row of `forwards` random
/// attention forwards (random graphs of 2-9 nodes, random kinds).
inline double attention_row_error(std::size_t forwards, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const LayerKind kinds[] = {LayerKind::kGat, LayerKind::kGatV2, LayerKind::kTransformer};
  double worst = 0.0;
  for (std::size_t f = 0; f < forwards; ++f) {
    const LayerKind kind = kinds[f % 3];
    const std::size_t n = 2 + rng() % 8;
    LayerConfig cfg = small_layer(kind);
    cfg.heads = 1 + rng() % 3;
    const WeightedGraph g = random_graph(n, rng, 0.3);
    const GraphOperators ops(g, {kind});
    const LayerParams p = init_layer_params(cfg, rng);
    Tape tape;
    tape.set_recording(false);
    SnapshotSink snaps;
    layer_forward(tape, DiffTensor::constant(random_matrix(n, cfg.in_dim, rng, -3, 3)), ops, p, cfg, &snaps);
    for (const auto& s : snaps)
      for (std::size_t v = 0; v < n; ++v) {
        double total = 0.0;
        for (std::size_t u = 0; u < n; ++u) {
          if (!ops.attention_mask()(v, u) && s.alpha(v, u) != 0.0) return INFINITY;
          total += s.alpha(v, u);
        }
        worst = std::max(worst, std::abs(total - 1.0));
      }
  }
  return worst;
}

/// Worst |APPNP(H0) - H0| at teleport 1, zero bias, identity activation.
inline double appnp_limit_error(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = 1 + rng() % 10;
    LayerConfig cfg = small_layer(LayerKind::kAppnp, 4);
    cfg.teleport = 1.0;
    cfg.hops = 1 + rng() % 10;
    const GraphOperators ops(random_graph(n, rng), {LayerKind::kAppnp});
    const LayerParams p = init_layer_params(cfg, rng);
    const Matrix h0 = random_matrix(n, 4, rng, -5, 5);
    Tape tape;
    worst = std::max(worst, max_abs_diff(appnp_forward(tape, DiffTensor::constant(h0), ops, p, cfg).value(), h0));
  }
  return worst;
}

/// Worst |layer(PH, Pg) - P layer(H, g)| for one kind.
inline double equivariance_error(LayerKind kind, std::size_t trials, std::uint64_t seed, std::size_t n = 8) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const LayerConfig cfg = small_layer(kind);
    const WeightedGraph g = random_graph(n, rng);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    const WeightedGraph gp = g.permuted(perm);
    const LayerParams p = init_layer_params(cfg, rng);
    const Matrix h = random_matrix(n, cfg.in_dim, rng);
    Matrix hp(n, cfg.in_dim);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < cfg.in_dim; ++c) hp(i, c) = h(perm[i], c);
    Tape tape;
    tape.set_recording(false);
    const Matrix out = layer_forward(tape, DiffTensor::constant(h), GraphOperators(g, {kind}), p, cfg).value();
    const Matrix outp = layer_forward(tape, DiffTensor::constant(hp), GraphOperators(gp, {kind}), p, cfg).value();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < out.cols(); ++c) worst = std::max(worst, std::abs(outp(i, c) - out(perm[i], c)));
  }
  return worst;
}

}  // namespace gridattn::testing

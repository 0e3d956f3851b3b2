// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridattn/feedforward.hpp"

#include <cmath>
#include <random>

#include "gridattn/error.hpp"

namespace gridattn {

FeedForwardModel::FeedForwardModel(FeedForwardSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  if (spec_.nodes == 0 || spec_.input_dim == 0 || spec_.horizon == 0) {
    throw ContractError("baselines::feedforward: dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  auto glorot = [&](std::size_t in, std::size_t out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix m(in, out);
    for (double& v : m.values()) v = dist(rng);
    return DiffTensor::parameter(std::move(m));
  };
  const std::size_t n = spec_.nodes;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<DiffTensor> node;
    std::size_t width = spec_.input_dim;
    for (std::size_t h : spec_.hidden) {
      node.push_back(glorot(width, h));
      node.push_back(DiffTensor::parameter(Matrix(1, h)));
      width = h;
    }
    node.push_back(glorot(width, spec_.horizon));
    node.push_back(DiffTensor::parameter(Matrix(1, spec_.horizon)));
    layers_.push_back(std::move(node));

    Matrix pick(1, n), place(n, 1);
    pick(0, i) = 1.0;
    place(i, 0) = 1.0;
    selectors_.push_back(DiffTensor::constant(std::move(pick)));
    selectors_.push_back(DiffTensor::constant(std::move(place)));
  }
}

std::vector<DiffTensor> FeedForwardModel::parameters() const {
  std::vector<DiffTensor> out;
  for (const auto& node : layers_) out.insert(out.end(), node.begin(), node.end());
  return out;
}

std::vector<std::string> FeedForwardModel::parameter_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::size_t depth = layers_[i].size() / 2;
    for (std::size_t l = 0; l < depth; ++l) {
      const std::string base = "node" + std::to_string(i) + (l + 1 == depth ? ".readout" : ".layer" + std::to_string(l));
      out.push_back(base + ".weight");
      out.push_back(base + ".bias");
    }
  }
  return out;
}

DiffTensor FeedForwardModel::forward(Tape& tape, const DiffTensor& input) const {
  if (input.rows() != spec_.nodes || input.cols() != spec_.input_dim) {
    throw DimensionError("baselines::feedforward: input " + input.value().shape_str() + ", expected (" +
                         std::to_string(spec_.nodes) + "x" + std::to_string(spec_.input_dim) + ")");
  }
  DiffTensor total;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& node = layers_[i];
    DiffTensor h = tape.matmul(selectors_[2 * i], input);
    for (std::size_t l = 0; l + 2 < node.size(); l += 2) h = tape.relu(tape.add_row_broadcast(tape.matmul(h, node[l]), node[l + 1]));
    DiffTensor out = tape.add_row_broadcast(tape.matmul(h, node[node.size() - 2]), node.back());
    DiffTensor placed = tape.matmul(selectors_[2 * i + 1], out);
    total = total.valid() ? tape.add(total, placed) : placed;
  }
  return total;
}

}  // namespace gridattn

// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "gridattn/autodiff.hpp"

namespace gridattn {

struct FeedForwardSpec {
  std::size_t nodes = 1;
  std::size_t input_dim = 1;
  std::size_t horizon = 48;
  std::vector<std::size_t> hidden = {128, 128};
};

/// One independent ReLU perceptron per node. Node i's output reads only row
/// i of the input.
class FeedForwardModel {
 public:
  FeedForwardModel() = default;
  FeedForwardModel(FeedForwardSpec spec, std::uint64_t seed);

  const FeedForwardSpec& spec() const { return spec_; }
  std::vector<DiffTensor> parameters() const;
  std::vector<std::string> parameter_names() const;

  /// input n x input_dim -> n x horizon
  DiffTensor forward(Tape& tape, const DiffTensor& input) const;

 private:
  FeedForwardSpec spec_;
  // per node: weight_0, bias_0, weight_1, bias_1, ..., readout weight, readout bias
  std::vector<std::vector<DiffTensor>> layers_;
  std::vector<DiffTensor> selectors_;  // e_i^T (1 x n) and e_i (n x 1), interleaved
};

}  // namespace gridattn

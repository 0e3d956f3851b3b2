// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gridattn/autodiff.hpp"

namespace gridattn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::uint64_t step_count = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;

  AdamState() = default;
  AdamState(AdamOptions opts, std::span<const DiffTensor> params);
};

/// One bias-corrected Adam update using the gradients accumulated on
/// `params`. Parameters without a gradient are treated as having zero
/// gradient. Throws OptimizationError on a non-finite gradient before any
/// parameter is touched.
void adam_step(AdamState& state, std::span<DiffTensor> params);

}  // namespace gridattn

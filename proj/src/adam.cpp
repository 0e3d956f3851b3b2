// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridattn/adam.hpp"

#include <cmath>

#include "gridattn/error.hpp"

namespace gridattn {

AdamState::AdamState(AdamOptions opts, std::span<const DiffTensor> params) : options(opts) {
  first_moment.reserve(params.size());
  second_moment.reserve(params.size());
  for (const auto& p : params) {
    first_moment.emplace_back(p.rows(), p.cols());
    second_moment.emplace_back(p.rows(), p.cols());
  }
}

void adam_step(AdamState& state, std::span<DiffTensor> params) {
  if (params.size() != state.first_moment.size()) {
    throw DimensionError("numerics::adam_step: state tracks " + std::to_string(state.first_moment.size()) +
                         " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].value().same_shape(state.first_moment[k])) {
      throw DimensionError("numerics::adam_step: parameter " + std::to_string(k) + " has shape " +
                           params[k].value().shape_str() + ", moments " + state.first_moment[k].shape_str());
    }
    if (params[k].has_grad() && !all_finite(params[k].grad())) {
      throw OptimizationError("numerics::adam_step: non-finite gradient in parameter " + std::to_string(k) +
                              " at step " + std::to_string(state.step_count + 1));
    }
  }

  const auto& o = state.options;
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(o.beta1, t);
  const double bc2 = 1.0 - std::pow(o.beta2, t);

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.first_moment[k].values();
    auto& v = state.second_moment[k].values();
    auto& w = params[k].mutable_value().values();
    const bool has = params[k].has_grad();
    const Matrix g = has ? params[k].grad() : Matrix();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = has ? g.values()[i] : 0.0;
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * gi;
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= o.lr * mhat / (std::sqrt(vhat) + o.epsilon);
    }
  }
}

}  // namespace gridattn

// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "gridattn/matrix.hpp"

namespace gridattn {

/// Closed set of differentiable primitives. Every convolution in layers.hpp is
/// expressed with these, so each one has exactly one backward rule to verify.
enum class Primitive : std::uint8_t {
  kMatmul,
  kAdd,
  kSub,
  kAddRowBroadcast,  // (n x m) + (1 x m)
  kScalarMul,
  kConcatCols,
  kTranspose,
  kPairwiseSum,  // a (n x 1), b (m x 1) -> a[v] + b[u]
  kRowSoftmax,
  kMaskedRowSoftmax,
  kLeakyRelu,
  kRelu,
  kSigmoid,
  kMul,
  kRowMaxPool,  // out[v] = elementwise max over mask-allowed rows u
  kSum,
  kMean,
};

std::string_view primitive_name(Primitive p);

/// Square boolean matrix. Row v lists the columns u that node v may read from.
class Mask {
 public:
  Mask() = default;
  explicit Mask(std::size_t n, bool fill = false) : n_(n), bits_(n * n, fill ? 1 : 0) {}

  std::size_t size() const { return n_; }
  bool operator()(std::size_t v, std::size_t u) const { return bits_[v * n_ + u] != 0; }
  void set(std::size_t v, std::size_t u, bool on = true) { bits_[v * n_ + u] = on ? 1 : 0; }
  std::size_t row_count(std::size_t v) const;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct TensorNode {
  Matrix value;
  Matrix grad;  // empty until first accumulation
  bool requires_grad = false;
};

/// Handle to a dense value that may participate in reverse-mode
/// differentiation. Copies share the same underlying node.
class DiffTensor {
 public:
  DiffTensor() = default;

  static DiffTensor parameter(Matrix value) { return DiffTensor(std::move(value), true); }
  static DiffTensor constant(Matrix value) { return DiffTensor(std::move(value), false); }

  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool has_grad() const { return node_ && !node_->grad.empty(); }
  /// Gradient accumulated by Tape::backward; zeros when none arrived yet.
  Matrix grad() const;
  void zero_grad();

  bool valid() const { return static_cast<bool>(node_); }
  const std::shared_ptr<TensorNode>& node() const { return node_; }

 private:
  friend class Tape;
  DiffTensor(Matrix value, bool requires_grad);
  explicit DiffTensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

  std::shared_ptr<TensorNode> node_;
};

struct OpRecord {
  Primitive kind;
  std::vector<std::shared_ptr<TensorNode>> inputs;
  std::shared_ptr<TensorNode> output;
  /// Reads output->grad and accumulates into the inputs that require grad.
  std::function<void()> backward;
};

/// Extra operands for record_forward.
struct OpArgs {
  double scalar = 0.0;  // kScalarMul factor, kLeakyRelu slope
  const Mask* mask = nullptr;
};

inline constexpr double kLeakyReluSlope = 0.2;

/// Linear record of operations for one forward pass. Confined to a single
/// thread; independent tapes may run concurrently on disjoint parameters.
class Tape {
 public:
  DiffTensor record_forward(Primitive kind, std::span<const DiffTensor> inputs, const OpArgs& args = {});

  DiffTensor matmul(const DiffTensor& a, const DiffTensor& b);
  DiffTensor add(const DiffTensor& a, const DiffTensor& b);
  DiffTensor sub(const DiffTensor& a, const DiffTensor& b);
  DiffTensor add_row_broadcast(const DiffTensor& a, const DiffTensor& row);
  DiffTensor scalar_mul(double s, const DiffTensor& a);
  DiffTensor concat_cols(std::span<const DiffTensor> parts);
  DiffTensor transpose(const DiffTensor& a);
  DiffTensor pairwise_sum(const DiffTensor& col_a, const DiffTensor& col_b);
  DiffTensor row_softmax(const DiffTensor& a);
  /// Softmax over the allowed entries of each row; disallowed entries are
  /// excluded from the normaliser and come out exactly 0. Rows with no
  /// allowed entry are all zero.
  DiffTensor masked_row_softmax(const DiffTensor& a, const Mask& mask);
  DiffTensor leaky_relu(const DiffTensor& a, double slope = kLeakyReluSlope);
  DiffTensor relu(const DiffTensor& a);
  DiffTensor sigmoid(const DiffTensor& a);
  DiffTensor mul(const DiffTensor& a, const DiffTensor& b);
  DiffTensor row_max_pool(const DiffTensor& a, const Mask& mask);
  DiffTensor sum(const DiffTensor& a);
  DiffTensor mean(const DiffTensor& a);

  /// Propagates d(root)/d(leaf) into every leaf that requires grad. Leaf
  /// gradients accumulate across calls; intermediate gradients are reset.
  void backward(const DiffTensor& root);

  std::size_t size() const { return records_.size(); }
  const std::vector<OpRecord>& records() const { return records_; }
  void clear() { records_.clear(); }

  /// With recording off every output is a constant: forward-only evaluation.
  void set_recording(bool on) { recording_ = on; }
  bool recording() const { return recording_; }

 private:
  DiffTensor emit(Primitive kind, Matrix value, std::vector<std::shared_ptr<TensorNode>> inputs,
                  std::function<void(TensorNode& out)> backward);

  std::vector<OpRecord> records_;
  bool recording_ = true;
};

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every entry of
/// every parameter. Parameters are perturbed in place and restored.
std::vector<Matrix> finite_difference_gradient(const std::function<double()>& f,
                                               std::span<DiffTensor> params, double h = 1e-6);

/// max_i |a_i - b_i| / max(max_i |b_i|, floor): the error of a gradient block
/// relative to its own scale.
double relative_error(const Matrix& analytic, const Matrix& reference, double floor = 1e-8);

}  // namespace gridattn

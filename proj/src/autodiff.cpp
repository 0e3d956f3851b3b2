// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridattn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gridattn/error.hpp"

namespace gridattn {

namespace {

using NodePtr = std::shared_ptr<TensorNode>;

void accumulate(TensorNode& node, const Matrix& g) {
  if (node.grad.empty()) {
    node.grad = g;
    return;
  }
  auto& dst = node.grad.values();
  const auto& src = g.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

[[noreturn]] void shape_error(Primitive p, const Matrix& a, const Matrix& b) {
  std::ostringstream os;
  os << "numerics::" << primitive_name(p) << ": shape mismatch " << a.shape_str() << " vs " << b.shape_str();
  throw DimensionError(os.str());
}

void check_mask(Primitive p, const Matrix& a, const Mask* mask) {
  if (mask == nullptr) throw ContractError(std::string("numerics::") + std::string(primitive_name(p)) + ": mask required");
  if (mask->size() != a.rows()) {
    std::ostringstream os;
    os << "numerics::" << primitive_name(p) << ": mask of size " << mask->size() << " for operand " << a.shape_str();
    throw DimensionError(os.str());
  }
}

}  // namespace

std::string_view primitive_name(Primitive p) {
  switch (p) {
    case Primitive::kMatmul: return "matmul";
    case Primitive::kAdd: return "add";
    case Primitive::kSub: return "sub";
    case Primitive::kAddRowBroadcast: return "add_row_broadcast";
    case Primitive::kScalarMul: return "scalar_mul";
    case Primitive::kConcatCols: return "concat";
    case Primitive::kTranspose: return "transpose";
    case Primitive::kPairwiseSum: return "pairwise_sum";
    case Primitive::kRowSoftmax: return "row_softmax";
    case Primitive::kMaskedRowSoftmax: return "masked_row_softmax";
    case Primitive::kLeakyRelu: return "leaky_relu";
    case Primitive::kRelu: return "relu";
    case Primitive::kSigmoid: return "sigmoid";
    case Primitive::kMul: return "mul";
    case Primitive::kRowMaxPool: return "row_max_pool";
    case Primitive::kSum: return "sum";
    case Primitive::kMean: return "mean";
  }
  return "unknown";
}

std::size_t Mask::row_count(std::size_t v) const {
  std::size_t c = 0;
  for (std::size_t u = 0; u < n_; ++u) c += bits_[v * n_ + u];
  return c;
}

DiffTensor::DiffTensor(Matrix value, bool requires_grad) : node_(std::make_shared<TensorNode>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Matrix DiffTensor::grad() const {
  if (node_->grad.empty()) return Matrix(rows(), cols());
  return node_->grad;
}

void DiffTensor::zero_grad() {
  if (node_) node_->grad = Matrix();
}

DiffTensor Tape::emit(Primitive kind, Matrix value, std::vector<NodePtr> inputs,
                      std::function<void(TensorNode& out)> backward) {
  auto out = std::make_shared<TensorNode>();
  out->value = std::move(value);
  out->requires_grad =
      recording_ && std::any_of(inputs.begin(), inputs.end(), [](const NodePtr& n) { return n->requires_grad; });
  if (out->requires_grad) {
    TensorNode* raw = out.get();
    records_.push_back(OpRecord{kind, std::move(inputs), out, [raw, fn = std::move(backward)] {
                                  if (!raw->grad.empty()) fn(*raw);
                                }});
  }
  return DiffTensor(out);
}

DiffTensor Tape::record_forward(Primitive kind, std::span<const DiffTensor> in, const OpArgs& args) {
  auto need = [&](std::size_t n) {
    if (in.size() != n) {
      std::ostringstream os;
      os << "numerics::" << primitive_name(kind) << ": expects " << n << " inputs, got " << in.size();
      throw ContractError(os.str());
    }
  };
  switch (kind) {
    case Primitive::kMatmul: need(2); return matmul(in[0], in[1]);
    case Primitive::kAdd: need(2); return add(in[0], in[1]);
    case Primitive::kSub: need(2); return sub(in[0], in[1]);
    case Primitive::kAddRowBroadcast: need(2); return add_row_broadcast(in[0], in[1]);
    case Primitive::kScalarMul: need(1); return scalar_mul(args.scalar, in[0]);
    case Primitive::kConcatCols: return concat_cols(in);
    case Primitive::kTranspose: need(1); return transpose(in[0]);
    case Primitive::kPairwiseSum: need(2); return pairwise_sum(in[0], in[1]);
    case Primitive::kRowSoftmax: need(1); return row_softmax(in[0]);
    case Primitive::kMaskedRowSoftmax:
      need(1);
      check_mask(kind, in[0].value(), args.mask);
      return masked_row_softmax(in[0], *args.mask);
    case Primitive::kLeakyRelu: need(1); return leaky_relu(in[0], args.scalar);
    case Primitive::kRelu: need(1); return relu(in[0]);
    case Primitive::kSigmoid: need(1); return sigmoid(in[0]);
    case Primitive::kMul: need(2); return mul(in[0], in[1]);
    case Primitive::kRowMaxPool:
      need(1);
      check_mask(kind, in[0].value(), args.mask);
      return row_max_pool(in[0], *args.mask);
    case Primitive::kSum: need(1); return sum(in[0]);
    case Primitive::kMean: need(1); return mean(in[0]);
  }
  throw ContractError("numerics::record_forward: unknown primitive");
}

DiffTensor Tape::matmul(const DiffTensor& a, const DiffTensor& b) {
  if (a.cols() != b.rows()) shape_error(Primitive::kMatmul, a.value(), b.value());
  NodePtr an = a.node(), bn = b.node();
  return emit(Primitive::kMatmul, gridattn::matmul(a.value(), b.value()), {an, bn}, [an, bn](TensorNode& out) {
    if (an->requires_grad) accumulate(*an, gridattn::matmul(out.grad, gridattn::transpose(bn->value)));
    if (bn->requires_grad) accumulate(*bn, gridattn::matmul(gridattn::transpose(an->value), out.grad));
  });
}

DiffTensor Tape::add(const DiffTensor& a, const DiffTensor& b) {
  if (!a.value().same_shape(b.value())) shape_error(Primitive::kAdd, a.value(), b.value());
  NodePtr an = a.node(), bn = b.node();
  return emit(Primitive::kAdd, a.value() + b.value(), {an, bn}, [an, bn](TensorNode& out) {
    if (an->requires_grad) accumulate(*an, out.grad);
    if (bn->requires_grad) accumulate(*bn, out.grad);
  });
}

DiffTensor Tape::sub(const DiffTensor& a, const DiffTensor& b) {
  if (!a.value().same_shape(b.value())) shape_error(Primitive::kSub, a.value(), b.value());
  NodePtr an = a.node(), bn = b.node();
  return emit(Primitive::kSub, a.value() - b.value(), {an, bn}, [an, bn](TensorNode& out) {
    if (an->requires_grad) accumulate(*an, out.grad);
    if (bn->requires_grad) accumulate(*bn, -1.0 * out.grad);
  });
}

DiffTensor Tape::add_row_broadcast(const DiffTensor& a, const DiffTensor& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) shape_error(Primitive::kAddRowBroadcast, a.value(), row.value());
  Matrix v = a.value();
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = 0; j < v.cols(); ++j) v(i, j) += row.value()(0, j);
  NodePtr an = a.node(), rn = row.node();
  return emit(Primitive::kAddRowBroadcast, std::move(v), {an, rn}, [an, rn](TensorNode& out) {
    if (an->requires_grad) accumulate(*an, out.grad);
    if (rn->requires_grad) {
      Matrix g(1, out.grad.cols());
      for (std::size_t i = 0; i < out.grad.rows(); ++i)
        for (std::size_t j = 0; j < out.grad.cols(); ++j) g(0, j) += out.grad(i, j);
      accumulate(*rn, g);
    }
  });
}

DiffTensor Tape::scalar_mul(double s, const DiffTensor& a) {
  NodePtr an = a.node();
  return emit(Primitive::kScalarMul, s * a.value(), {an}, [an, s](TensorNode& out) {
    accumulate(*an, s * out.grad);
  });
}

DiffTensor Tape::concat_cols(std::span<const DiffTensor> parts) {
  if (parts.empty()) throw ContractError("numerics::concat: no operands");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  std::vector<NodePtr> nodes;
  for (const auto& p : parts) {
    if (p.rows() != rows) shape_error(Primitive::kConcatCols, parts[0].value(), p.value());
    cols += p.cols();
    nodes.push_back(p.node());
  }
  Matrix v(rows, cols);
  std::size_t off = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < p.cols(); ++j) v(i, off + j) = p.value()(i, j);
    off += p.cols();
  }
  auto captured = nodes;
  return emit(Primitive::kConcatCols, std::move(v), std::move(nodes), [captured](TensorNode& out) {
    std::size_t offset = 0;
    for (const auto& n : captured) {
      const std::size_t c = n->value.cols();
      if (n->requires_grad) {
        Matrix g(out.grad.rows(), c);
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < c; ++j) g(i, j) = out.grad(i, offset + j);
        accumulate(*n, g);
      }
      offset += c;
    }
  });
}

DiffTensor Tape::transpose(const DiffTensor& a) {
  NodePtr an = a.node();
  return emit(Primitive::kTranspose, gridattn::transpose(a.value()), {an}, [an](TensorNode& out) {
    accumulate(*an, gridattn::transpose(out.grad));
  });
}

DiffTensor Tape::pairwise_sum(const DiffTensor& col_a, const DiffTensor& col_b) {
  if (col_a.cols() != 1 || col_b.cols() != 1) shape_error(Primitive::kPairwiseSum, col_a.value(), col_b.value());
  const std::size_t n = col_a.rows(), m = col_b.rows();
  Matrix v(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) v(i, j) = col_a.value()(i, 0) + col_b.value()(j, 0);
  NodePtr an = col_a.node(), bn = col_b.node();
  return emit(Primitive::kPairwiseSum, std::move(v), {an, bn}, [an, bn](TensorNode& out) {
    const std::size_t rows = out.grad.rows(), cols = out.grad.cols();
    if (an->requires_grad) {
      Matrix g(rows, 1);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) g(i, 0) += out.grad(i, j);
      accumulate(*an, g);
    }
    if (bn->requires_grad) {
      Matrix g(cols, 1);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) g(j, 0) += out.grad(i, j);
      accumulate(*bn, g);
    }
  });
}

namespace {

Matrix softmax_rows(const Matrix& a, const Mask* mask) {
  Matrix y(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (!mask || (*mask)(i, j)) mx = std::max(mx, a(i, j));
    if (!std::isfinite(mx)) continue;
    double z = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (mask && !(*mask)(i, j)) continue;
      y(i, j) = std::exp(a(i, j) - mx);
      z += y(i, j);
    }
    for (std::size_t j = 0; j < a.cols(); ++j) y(i, j) /= z;
  }
  return y;
}

// dS_ij = y_ij (dY_ij - sum_k dY_ik y_ik); masked entries have y = 0.
Matrix softmax_backward(const Matrix& y, const Matrix& dy) {
  Matrix g(y.rows(), y.cols());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < y.cols(); ++j) dot += dy(i, j) * y(i, j);
    for (std::size_t j = 0; j < y.cols(); ++j) g(i, j) = y(i, j) * (dy(i, j) - dot);
  }
  return g;
}

}  // namespace

DiffTensor Tape::row_softmax(const DiffTensor& a) {
  NodePtr an = a.node();
  return emit(Primitive::kRowSoftmax, softmax_rows(a.value(), nullptr), {an}, [an](TensorNode& out) {
    accumulate(*an, softmax_backward(out.value, out.grad));
  });
}

DiffTensor Tape::masked_row_softmax(const DiffTensor& a, const Mask& mask) {
  if (a.rows() != mask.size() || a.cols() != mask.size()) {
    std::ostringstream os;
    os << "numerics::masked_row_softmax: mask of size " << mask.size() << " for operand " << a.value().shape_str();
    throw DimensionError(os.str());
  }
  NodePtr an = a.node();
  return emit(Primitive::kMaskedRowSoftmax, softmax_rows(a.value(), &mask), {an}, [an](TensorNode& out) {
    accumulate(*an, softmax_backward(out.value, out.grad));
  });
}

DiffTensor Tape::leaky_relu(const DiffTensor& a, double slope) {
  Matrix v = a.value();
  for (double& x : v.values()) x = x > 0.0 ? x : slope * x;
  NodePtr an = a.node();
  return emit(Primitive::kLeakyRelu, std::move(v), {an}, [an, slope](TensorNode& out) {
    Matrix g = out.grad;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!(an->value.values()[i] > 0.0)) g.values()[i] *= slope;
    accumulate(*an, g);
  });
}

DiffTensor Tape::relu(const DiffTensor& a) {
  Matrix v = a.value();
  for (double& x : v.values()) x = x > 0.0 ? x : 0.0;
  NodePtr an = a.node();
  return emit(Primitive::kRelu, std::move(v), {an}, [an](TensorNode& out) {
    Matrix g = out.grad;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!(an->value.values()[i] > 0.0)) g.values()[i] = 0.0;
    accumulate(*an, g);
  });
}

DiffTensor Tape::sigmoid(const DiffTensor& a) {
  Matrix v = a.value();
  for (double& x : v.values()) {
    if (x >= 0.0) {
      x = 1.0 / (1.0 + std::exp(-x));
    } else {
      const double e = std::exp(x);
      x = e / (1.0 + e);
    }
  }
  NodePtr an = a.node();
  return emit(Primitive::kSigmoid, std::move(v), {an}, [an](TensorNode& out) {
    Matrix g = out.grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = out.value.values()[i];
      g.values()[i] *= y * (1.0 - y);
    }
    accumulate(*an, g);
  });
}

DiffTensor Tape::mul(const DiffTensor& a, const DiffTensor& b) {
  if (!a.value().same_shape(b.value())) shape_error(Primitive::kMul, a.value(), b.value());
  Matrix v = a.value();
  for (std::size_t i = 0; i < v.size(); ++i) v.values()[i] *= b.value().values()[i];
  NodePtr an = a.node(), bn = b.node();
  return emit(Primitive::kMul, std::move(v), {an, bn}, [an, bn](TensorNode& out) {
    if (an->requires_grad) {
      Matrix g = out.grad;
      for (std::size_t i = 0; i < g.size(); ++i) g.values()[i] *= bn->value.values()[i];
      accumulate(*an, g);
    }
    if (bn->requires_grad) {
      Matrix g = out.grad;
      for (std::size_t i = 0; i < g.size(); ++i) g.values()[i] *= an->value.values()[i];
      accumulate(*bn, g);
    }
  });
}

DiffTensor Tape::row_max_pool(const DiffTensor& a, const Mask& mask) {
  const std::size_t n = mask.size(), d = a.cols();
  if (a.rows() != n) {
    std::ostringstream os;
    os << "numerics::row_max_pool: mask of size " << n << " for operand " << a.value().shape_str();
    throw DimensionError(os.str());
  }
  Matrix v(n, d);
  std::vector<std::size_t> argmax(n * d, 0);
  for (std::size_t row = 0; row < n; ++row) {
    if (mask.row_count(row) == 0) {
      throw DegeneracyError("numerics::row_max_pool: node " + std::to_string(row) + " has an empty neighbourhood");
    }
    for (std::size_t j = 0; j < d; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t u = 0; u < n; ++u) {
        if (!mask(row, u)) continue;
        if (a.value()(u, j) > best) {
          best = a.value()(u, j);
          arg = u;
        }
      }
      v(row, j) = best;
      argmax[row * d + j] = arg;
    }
  }
  NodePtr an = a.node();
  return emit(Primitive::kRowMaxPool, std::move(v), {an}, [an, argmax = std::move(argmax), d](TensorNode& out) {
    Matrix g(an->value.rows(), d);
    for (std::size_t row = 0; row < out.grad.rows(); ++row)
      for (std::size_t j = 0; j < d; ++j) g(argmax[row * d + j], j) += out.grad(row, j);
    accumulate(*an, g);
  });
}

DiffTensor Tape::sum(const DiffTensor& a) {
  double s = 0.0;
  for (double x : a.value().values()) s += x;
  NodePtr an = a.node();
  return emit(Primitive::kSum, Matrix(1, 1, s), {an}, [an](TensorNode& out) {
    accumulate(*an, Matrix(an->value.rows(), an->value.cols(), out.grad(0, 0)));
  });
}

DiffTensor Tape::mean(const DiffTensor& a) {
  if (a.value().empty()) throw ContractError("numerics::mean: empty operand");
  double s = 0.0;
  for (double x : a.value().values()) s += x;
  const double count = static_cast<double>(a.value().size());
  NodePtr an = a.node();
  return emit(Primitive::kMean, Matrix(1, 1, s / count), {an}, [an, count](TensorNode& out) {
    accumulate(*an, Matrix(an->value.rows(), an->value.cols(), out.grad(0, 0) / count));
  });
}

void Tape::backward(const DiffTensor& root) {
  if (!root.valid() || root.rows() != 1 || root.cols() != 1) {
    throw ContractError("numerics::backward: root must be a 1x1 scalar, got " +
                        (root.valid() ? root.value().shape_str() : std::string("(null)")));
  }
  if (!root.requires_grad()) return;
  for (auto& rec : records_) rec.output->grad = Matrix();
  accumulate(*root.node(), Matrix(1, 1, 1.0));
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) it->backward();
}

std::vector<Matrix> finite_difference_gradient(const std::function<double()>& f, std::span<DiffTensor> params,
                                               double h) {
  if (!(h > 0.0)) throw ContractError("numerics::finite_difference_gradient: step must be positive");
  std::vector<Matrix> grads;
  grads.reserve(params.size());
  for (auto& p : params) {
    Matrix g(p.rows(), p.cols());
    auto& vals = p.mutable_value().values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double orig = vals[i];
      vals[i] = orig + h;
      const double fp = f();
      vals[i] = orig - h;
      const double fm = f();
      vals[i] = orig;
      g.values()[i] = (fp - fm) / (2.0 * h);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

double relative_error(const Matrix& analytic, const Matrix& reference, double floor) {
  return max_abs_diff(analytic, reference) / std::max(max_abs(reference), floor);
}

}  // namespace gridattn

// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace gridattn {

// Every error message starts with "<module>::<operation>: " so the CLI can
// report which contract was violated.

/// Precondition or input-format violation. CLI exit code 1.
class ContractError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not satisfy a primitive's contract.
class DimensionError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// Graph structure that an operator cannot handle (isolated node, empty
/// neighbourhood, constant series).
class DegeneracyError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// Graph inference could not produce a connected graph.
class InferenceError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// Floating-point failure: NaN loss, singular matrix, zero denominators.
/// CLI exit code 2.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OptimizationError : public NumericError {
 public:
  using NumericError::NumericError;
};

class MetricError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace gridattn

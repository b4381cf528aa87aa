// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fdnas/nn/op_kind.hpp"
#include "fdnas/nn/tensor.hpp"

namespace fdnas {

/// Activation record produced by op_forward and consumed by op_backward.
struct OpCache {
  std::size_t kind = 0;  // variant index of the producing OpKind
  Shape input_shape;     // full batched shapes
  Shape output_shape;
  std::vector<Tensor> saved;
  std::vector<std::size_t> relu_slots;  // entries of `saved` holding post-ReLU values

  /// Flattened on/off state of every ReLU in the op. Two evaluations with
  /// equal patterns lie in the same linear region.
  std::vector<std::uint8_t> activation_pattern() const;
};

struct OpForward {
  Tensor output;
  OpCache cache;
};

enum class GradRequest : std::uint8_t { kAll, kInputOnly, kParamsOnly };

struct OpBackward {
  Tensor grad_input;                // empty when not requested
  std::vector<Tensor> grad_params;  // mirrors the op's parameter list; empty when not requested
};

/// Batched forward pass. `input` is [B, ...per-example shape]; `params` must
/// match op_param_shapes for that per-example shape.
OpForward op_forward(const OpKind& op, std::span<const Tensor> params, const Tensor& input);

OpBackward op_backward(const OpKind& op, std::span<const Tensor> params, const OpCache& cache,
                       const Tensor& grad_out, GradRequest request = GradRequest::kAll);

/// Per-example shape of a batched tensor.
Shape example_shape(const Tensor& batch);
Shape with_batch(std::size_t batch, const Shape& example);

}  // namespace fdnas

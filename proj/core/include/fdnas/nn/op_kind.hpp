// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fdnas/nn/tensor.hpp"

namespace fdnas {

struct Identity {
  friend bool operator==(const Identity&, const Identity&) = default;
};

// Annihilator: maps any input to zeros of the same shape.
struct Zero {
  friend bool operator==(const Zero&, const Zero&) = default;
};

// Fully connected over the flattened per-example input. No activation.
struct Dense {
  std::size_t out_features = 0;
  friend bool operator==(const Dense&, const Dense&) = default;
};

// Full k x k convolution, stride 1, zero padded to preserve H x W, with bias
// and an optional trailing ReLU.
struct Conv {
  std::size_t kernel = 3;
  std::size_t channels = 0;
  bool relu = true;
  friend bool operator==(const Conv&, const Conv&) = default;
};

// Inverted-residual style block without normalization:
//   [1x1 expand to e*C_in + ReLU]  (only when expansion > 1)
//   k x k depthwise + ReLU
//   1x1 linear projection to `channels`, plus the input when the channel
//   counts match (inverted-residual skip)
struct DepthwiseSepConv {
  std::size_t kernel = 3;
  std::size_t channels = 0;
  std::size_t expansion = 1;
  friend bool operator==(const DepthwiseSepConv&, const DepthwiseSepConv&) = default;
};

// Average pooling. Stride 1 pads by kernel/2 and divides by kernel^2 (padding
// counted); stride > 1 is unpadded and used for fixed downsampling layers.
struct AvgPool {
  std::size_t kernel = 3;
  std::size_t stride = 1;
  friend bool operator==(const AvgPool&, const AvgPool&) = default;
};

using OpKind = std::variant<Identity, Zero, Dense, Conv, DepthwiseSepConv, AvgPool>;

/// Short name, e.g. "dwsep5x5_e3"; channel counts are implied by the layer.
std::string op_name(const OpKind& op);
/// Name including channel counts for listings.
std::string op_describe(const OpKind& op);
/// Parses a candidate name as produced by op_name. `channels` fills in the
/// channel count of conv-like ops, `out_features` that of dense ops.
OpKind parse_op(std::string_view name, std::size_t channels, std::size_t out_features = 0);

/// Per-example output shape; throws ShapeError when `in` violates the op's
/// input contract.
Shape op_output_shape(const OpKind& op, const Shape& in);
std::vector<Shape> op_param_shapes(const OpKind& op, const Shape& in);
std::size_t op_param_count(const OpKind& op, const Shape& in);
/// Multiply-accumulate count for one example.
std::uint64_t op_macs(const OpKind& op, const Shape& in);

inline bool is_zero_op(const OpKind& op) { return std::holds_alternative<Zero>(op); }

}  // namespace fdnas

// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fdnas/nn/tensor.hpp"

namespace fdnas {

using Label = std::uint32_t;

struct LossResult {
  double loss = 0.0;  // mean over the batch
  Tensor grad;        // d loss / d logits, same shape as logits
};

/// Softmax cross-entropy over logits [batch, classes], averaged over the batch.
LossResult cross_entropy(const Tensor& logits, std::span<const Label> labels);

/// Row-wise argmax, ties resolved to the lowest class index.
std::vector<Label> predict(const Tensor& logits);
/// Number of rows whose argmax equals the label.
std::size_t count_correct(const Tensor& logits, std::span<const Label> labels);

}  // namespace fdnas

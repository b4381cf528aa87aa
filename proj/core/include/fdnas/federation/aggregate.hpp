// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "fdnas/supernet/arch.hpp"
#include "fdnas/supernet/topology.hpp"

namespace fdnas {

struct ModelUpdate {
  ParamSet weights;
  ArchParams arch;
};

/// sum_k (sizes[k] / denominator) * lists[k], elementwise, accumulated in
/// list order. A zero denominator means sum(sizes).
std::vector<Tensor> weighted_average(std::span<const std::vector<Tensor>* const> lists, std::span<const double> sizes,
                                     double denominator = 0.0);

/// Applies the same weighting to weights and architecture logits.
ModelUpdate aggregate(std::span<const ModelUpdate> updates, std::span<const double> sizes, double denominator = 0.0);

}  // namespace fdnas

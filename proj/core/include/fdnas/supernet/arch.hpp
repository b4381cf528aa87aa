// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fdnas/nn/tensor.hpp"
#include "fdnas/rng.hpp"

namespace fdnas {

class Topology;

/// Architecture logits, one 1-D tensor per searchable layer.
struct ArchParams {
  std::vector<Tensor> logits;

  std::size_t num_layers() const { return logits.size(); }
  bool all_finite() const;
  friend bool operator==(const ArchParams&, const ArchParams&) = default;
};

/// Uniform (all-zero) logits matching the topology's searchable layers.
ArchParams uniform_arch(const Topology& topo);

/// Max-shifted softmax.
std::vector<double> softmax_probs(std::span<const double> logits);

/// One active candidate per searchable layer.
struct GateSample {
  std::vector<std::size_t> choices;
  friend bool operator==(const GateSample&, const GateSample&) = default;
};

/// Draws each layer's candidate independently with probability softmax(logits).
GateSample sample_gates(const ArchParams& arch, Rng& rng);

/// Per-layer argmax (ties to the lowest index).
std::vector<std::size_t> argmax_choices(const ArchParams& arch);

}  // namespace fdnas

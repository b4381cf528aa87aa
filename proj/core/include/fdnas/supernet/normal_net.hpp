// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fdnas/supernet/supernet.hpp"

namespace fdnas {

/// Discrete network obtained from a SuperNet: every layer is fixed and
/// layers whose chosen candidate is Zero are dropped.
struct NormalNet {
  std::shared_ptr<const Topology> topology;
  ParamSet weights;
  std::vector<std::size_t> choices;  // per searchable layer of the source SuperNet

  Tensor forward(const Tensor& batch) const;
  /// Human-readable op names of the kept layers, in chain order.
  std::vector<std::string> layer_names() const;
};

NormalNet derive_from_choices(const SuperNet& net, std::span<const std::size_t> choices);
/// Per-layer argmax over the logits (ties take the lowest index).
NormalNet derive_normal_net(const SuperNet& net, const ArchParams& arch);
/// Same architecture with fresh weights.
NormalNet reinitialize(const NormalNet& net, std::uint64_t seed);

struct FlopsParams {
  std::uint64_t macs = 0;
  std::uint64_t params = 0;
  friend bool operator==(const FlopsParams&, const FlopsParams&) = default;
};

/// Multiply-adds per example and parameter count along one path.
FlopsParams count_flops_params(const Topology& topo, std::span<const std::size_t> path);
FlopsParams count_flops_params(const NormalNet& net);
FlopsParams count_flops_params(const SuperNet& net, const GateSample& gates);
/// Largest multiply-add count over all paths through the SuperNet.
std::uint64_t max_path_flops(const Topology& topo);

}  // namespace fdnas

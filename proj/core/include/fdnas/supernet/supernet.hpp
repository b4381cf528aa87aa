// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "fdnas/nn/loss.hpp"
#include "fdnas/nn/ops.hpp"
#include "fdnas/supernet/arch.hpp"
#include "fdnas/supernet/latency.hpp"
#include "fdnas/supernet/topology.hpp"

namespace fdnas {

/// Over-parameterized chain: every searchable layer carries the weights of
/// all of its candidates. Copies are independent (the topology is shared
/// read-only).
struct SuperNet {
  std::shared_ptr<const Topology> topology;
  ParamSet weights;

  static SuperNet create(std::shared_ptr<const Topology> topo, std::uint64_t seed);
  const Topology& topo() const { return *topology; }
  std::span<const Tensor> candidate_params(std::size_t layer, std::size_t candidate) const;
};

/// Forward record of a single path through the chain.
struct PathTrace {
  std::vector<std::size_t> path;  // candidate per layer
  std::vector<OpCache> caches;
  Tensor output;
};

PathTrace forward_path(const Topology& topo, const ParamSet& weights, std::span<const std::size_t> path,
                       const Tensor& batch);
/// Parameter gradients of the path; slots of inactive candidates stay empty.
GradSet backward_path(const Topology& topo, const ParamSet& weights, const PathTrace& trace,
                      const Tensor& grad_output);

/// Binary-gated forward: only the gated candidate of each searchable layer runs.
PathTrace forward_sampled(const SuperNet& net, const GateSample& gates, const Tensor& batch);

struct MixtureLayerTrace {
  std::vector<double> probs;        // {1} for fixed layers
  std::vector<std::size_t> active;  // candidates evaluated (probability > 0)
  std::vector<OpCache> caches;      // aligned with `active`
  std::vector<Tensor> outputs;      // candidate outputs, searchable layers only
};

struct MixtureTrace {
  std::vector<MixtureLayerTrace> layers;
  Tensor output;
};

/// Each searchable layer outputs sum_n softmax(alpha)_n * o_n(x).
MixtureTrace forward_mixture(const SuperNet& net, const ArchParams& arch, const Tensor& batch);
/// d loss / d logits for every searchable layer, given d loss / d output.
std::vector<Tensor> backward_mixture_arch(const SuperNet& net, const MixtureTrace& trace, const Tensor& grad_output);

struct ArchGradient {
  double loss = 0.0;           // cross_entropy + latency_weight * latency_ms
  double cross_entropy = 0.0;
  double latency_ms = 0.0;     // expected latency (0 without a table)
  std::vector<Tensor> grad;    // per searchable layer
};

/// Gradient of [CE(forward_mixture) + latency_weight * expected_latency]
/// with respect to the architecture logits. `table` may be null when
/// latency_weight is zero.
ArchGradient alpha_gradient(const SuperNet& net, const ArchParams& arch, const Tensor& batch,
                            std::span<const Label> labels, const LatencyTable* table, double latency_weight);

void require_compatible(const Topology& topo, const ArchParams& arch);

}  // namespace fdnas

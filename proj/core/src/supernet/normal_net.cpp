// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/supernet/normal_net.hpp"

#include <algorithm>

#include "fdnas/error.hpp"

namespace fdnas {

Tensor NormalNet::forward(const Tensor& batch) const {
  const std::vector<std::size_t> path(topology->size(), 0);
  return forward_path(*topology, weights, path, batch).output;
}

std::vector<std::string> NormalNet::layer_names() const {
  std::vector<std::string> names;
  for (const auto& spec : topology->layers()) names.push_back(op_name(spec.def.candidates[0]));
  return names;
}

NormalNet derive_from_choices(const SuperNet& net, std::span<const std::size_t> choices) {
  const Topology& topo = net.topo();
  if (choices.size() != topo.num_searchable()) {
    throw ShapeError("derive: " + std::to_string(choices.size()) + " choices for " +
                     std::to_string(topo.num_searchable()) + " searchable layers");
  }
  const auto path = topo.path_from_choices(choices);
  std::vector<LayerDef> defs;
  ParamSet weights;
  for (std::size_t li = 0; li < topo.size(); ++li) {
    const OpKind& op = topo.layer(li).def.candidates[path[li]];
    if (is_zero_op(op)) continue;
    defs.push_back(LayerDef::fixed(op));
    const std::size_t begin = topo.param_begin(li, path[li]);
    for (std::size_t s = 0; s < topo.param_count(li, path[li]); ++s) weights.tensors.push_back(net.weights.tensors[begin + s]);
  }
  NormalNet out;
  out.topology = std::make_shared<const Topology>(topo.input_shape(), std::move(defs));
  out.weights = std::move(weights);
  out.choices.assign(choices.begin(), choices.end());
  return out;
}

NormalNet derive_normal_net(const SuperNet& net, const ArchParams& arch) {
  require_compatible(net.topo(), arch);
  if (!arch.all_finite()) throw NumericError("derive: architecture logits are not finite");
  return derive_from_choices(net, argmax_choices(arch));
}

NormalNet reinitialize(const NormalNet& net, std::uint64_t seed) {
  NormalNet out = net;
  out.weights = init_params(*net.topology, seed);
  return out;
}

FlopsParams count_flops_params(const Topology& topo, std::span<const std::size_t> path) {
  if (path.size() != topo.size()) throw ShapeError("path length does not match layer count");
  FlopsParams fp;
  for (std::size_t li = 0; li < topo.size(); ++li) {
    const auto& spec = topo.layer(li);
    const OpKind& op = spec.def.candidates.at(path[li]);
    fp.macs += op_macs(op, spec.input_shape);
    fp.params += op_param_count(op, spec.input_shape);
  }
  return fp;
}

FlopsParams count_flops_params(const NormalNet& net) {
  return count_flops_params(*net.topology, std::vector<std::size_t>(net.topology->size(), 0));
}

FlopsParams count_flops_params(const SuperNet& net, const GateSample& gates) {
  return count_flops_params(net.topo(), net.topo().path_from_choices(gates.choices));
}

std::uint64_t max_path_flops(const Topology& topo) {
  std::uint64_t total = 0;
  for (const auto& spec : topo.layers()) {
    std::uint64_t best = 0;
    for (const auto& op : spec.def.candidates) best = std::max(best, op_macs(op, spec.input_shape));
    total += best;
  }
  return total;
}

}  // namespace fdnas

// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/supernet/topology.hpp"

#include <algorithm>
#include <cmath>

#include "fdnas/error.hpp"
#include "fdnas/rng.hpp"

namespace fdnas {

Topology::Topology(Shape input_shape, std::vector<LayerDef> layers) : input_shape_(std::move(input_shape)) {
  if (layers.empty()) throw ArgumentError("topology needs at least one layer");
  Shape cur = input_shape_;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    LayerDef& def = layers[li];
    if (def.candidates.empty()) throw ArgumentError("layer " + std::to_string(li) + " has no candidates");
    if (def.searchable && def.candidates.size() < 2) {
      throw ArgumentError("searchable layer " + std::to_string(li) + " needs at least two candidates");
    }
    if (!def.searchable && def.candidates.size() != 1) {
      throw ArgumentError("fixed layer " + std::to_string(li) + " must have exactly one operation");
    }
    Shape out = op_output_shape(def.candidates[0], cur);
    std::vector<std::size_t> offs;
    for (std::size_t ci = 0; ci < def.candidates.size(); ++ci) {
      Shape o = op_output_shape(def.candidates[ci], cur);
      if (o != out) {
        throw ShapeError("layer " + std::to_string(li) + " candidate " + op_name(def.candidates[ci]) +
                         " produces " + shape_str(o) + ", expected " + shape_str(out));
      }
      offs.push_back(registry_.size());
      auto ps = op_param_shapes(def.candidates[ci], cur);
      for (std::size_t s = 0; s < ps.size(); ++s) {
        registry_.push_back({li, ci, s});
        shapes_.push_back(ps[s]);
      }
    }
    offsets_.push_back(std::move(offs));
    if (def.searchable) searchable_.push_back(li);
    layers_.push_back({std::move(def), cur, out});
    cur = std::move(out);
  }
}

std::vector<std::size_t> Topology::candidate_counts() const {
  std::vector<std::size_t> out;
  for (std::size_t li : searchable_) out.push_back(layers_[li].def.candidates.size());
  return out;
}

std::size_t Topology::param_count(std::size_t layer, std::size_t candidate) const {
  const auto& offs = offsets_.at(layer);
  std::size_t begin = offs.at(candidate);
  std::size_t end;
  if (candidate + 1 < offs.size()) {
    end = offs[candidate + 1];
  } else if (layer + 1 < offsets_.size()) {
    end = offsets_[layer + 1].front();
  } else {
    end = registry_.size();
  }
  return end - begin;
}

std::size_t Topology::scalar_param_count() const {
  std::size_t n = 0;
  for (const auto& s : shapes_) n += shape_numel(s);
  return n;
}

std::vector<std::size_t> Topology::path_from_choices(std::span<const std::size_t> choices) const {
  if (choices.size() != searchable_.size()) {
    throw ShapeError("expected " + std::to_string(searchable_.size()) + " layer choices, got " +
                     std::to_string(choices.size()));
  }
  std::vector<std::size_t> path(layers_.size(), 0);
  for (std::size_t s = 0; s < searchable_.size(); ++s) {
    const std::size_t li = searchable_[s];
    if (choices[s] >= layers_[li].def.candidates.size()) {
      throw ArgumentError("choice " + std::to_string(choices[s]) + " out of range at searchable layer " +
                          std::to_string(s));
    }
    path[li] = choices[s];
  }
  return path;
}

std::string Topology::signature() const {
  std::string s = "in" + shape_str(input_shape_);
  for (const auto& l : layers_) {
    s += l.def.searchable ? "|S:" : "|F:";
    for (std::size_t i = 0; i < l.def.candidates.size(); ++i) {
      if (i) s += ",";
      s += op_describe(l.def.candidates[i]);
    }
  }
  return s;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

bool ParamSet::all_finite() const {
  return std::all_of(tensors.begin(), tensors.end(), [](const Tensor& t) { return t.all_finite(); });
}

ParamSet zero_params(const Topology& topo) {
  ParamSet p;
  for (const auto& s : topo.param_shapes()) p.tensors.emplace_back(s);
  return p;
}

ParamSet init_params(const Topology& topo, std::uint64_t seed) {
  ParamSet p = zero_params(topo);
  Rng rng(derive_seed(seed, {stream::kInit}));
  const auto reg = topo.registry();
  for (std::size_t i = 0; i < reg.size(); ++i) {
    Tensor& t = p.tensors[i];
    if (t.rank() < 2) continue;  // biases stay zero
    const OpKind& op = topo.layer(reg[i].layer).def.candidates[reg[i].candidate];
    // fan-in = all dims except the leading output dim
    const double fan_in = static_cast<double>(t.size() / t.dim(0));
    // layers not followed by a ReLU: the classifier and the separable projection
    const auto* sep = std::get_if<DepthwiseSepConv>(&op);
    const bool linear = std::holds_alternative<Dense>(op) || (sep != nullptr && reg[i].slot + 2 == op_param_shapes(op, topo.layer(reg[i].layer).input_shape).size());
    const double stddev = std::sqrt((linear ? 1.0 : 2.0) / fan_in);
    for (double& v : t.values()) v = stddev * rng.normal();
  }
  return p;
}

std::shared_ptr<const Topology> build_search_space(const SearchSpaceConfig& cfg) {
  if (cfg.input_shape.size() != 3) throw ConfigError("supernet input shape must be [C,H,W]");
  if (cfg.num_layers == 0) throw ConfigError("supernet needs at least one searchable layer");
  if (cfg.candidates.size() < 2) throw ConfigError("supernet needs at least two candidate operations");
  if (cfg.num_classes < 2) throw ConfigError("supernet needs at least two classes");
  std::vector<LayerDef> layers;
  layers.push_back(LayerDef::fixed(Conv{3, cfg.channels, true}));
  std::vector<OpKind> cands;
  for (const auto& name : cfg.candidates) cands.push_back(parse_op(name, cfg.channels));
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    layers.push_back(LayerDef::search(cands));
    if (std::find(cfg.downsample_after.begin(), cfg.downsample_after.end(), l) != cfg.downsample_after.end()) {
      layers.push_back(LayerDef::fixed(AvgPool{2, 2}));
    }
  }
  for (std::size_t d : cfg.downsample_after) {
    if (d >= cfg.num_layers) throw ConfigError("downsample_after index " + std::to_string(d) + " out of range");
  }
  layers.push_back(LayerDef::fixed(Dense{cfg.num_classes}));
  return std::make_shared<const Topology>(cfg.input_shape, std::move(layers));
}

}  // namespace fdnas

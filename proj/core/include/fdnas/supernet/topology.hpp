// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fdnas/nn/op_kind.hpp"
#include "fdnas/nn/tensor.hpp"

namespace fdnas {

/// One layer of a chain network. A searchable layer holds >= 2 interchangeable
/// candidates; a fixed layer holds exactly one.
struct LayerDef {
  std::vector<OpKind> candidates;
  bool searchable = false;

  static LayerDef fixed(OpKind op) { return {{std::move(op)}, false}; }
  static LayerDef search(std::vector<OpKind> ops) { return {std::move(ops), true}; }
};

struct LayerSpec {
  LayerDef def;
  Shape input_shape;   // per example
  Shape output_shape;  // per example; identical for every candidate
};

/// Position of one parameter tensor in the flat registry.
struct ParamEntry {
  std::size_t layer = 0;
  std::size_t candidate = 0;
  std::size_t slot = 0;
  friend bool operator==(const ParamEntry&, const ParamEntry&) = default;
};

/// Immutable network structure: layer chain, per-layer shapes and the flat
/// parameter registry (ordered by layer, candidate, slot).
class Topology {
 public:
  Topology(Shape input_shape, std::vector<LayerDef> layers);

  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const { return layers_.back().output_shape; }
  std::span<const LayerSpec> layers() const { return layers_; }
  const LayerSpec& layer(std::size_t i) const { return layers_.at(i); }
  std::size_t size() const { return layers_.size(); }

  /// Layer indices of the searchable layers, in chain order.
  std::span<const std::size_t> searchable_layers() const { return searchable_; }
  std::size_t num_searchable() const { return searchable_.size(); }
  std::vector<std::size_t> candidate_counts() const;

  /// First registry index and tensor count of one candidate's parameters.
  std::size_t param_begin(std::size_t layer, std::size_t candidate) const { return offsets_.at(layer).at(candidate); }
  std::size_t param_count(std::size_t layer, std::size_t candidate) const;
  std::span<const ParamEntry> registry() const { return registry_; }
  std::span<const Shape> param_shapes() const { return shapes_; }
  std::size_t scalar_param_count() const;

  /// Maps a per-searchable-layer choice to a full per-layer path (fixed
  /// layers take candidate 0).
  std::vector<std::size_t> path_from_choices(std::span<const std::size_t> choices) const;

  /// Stable textual fingerprint of the structure.
  std::string signature() const;

  friend bool operator==(const Topology& a, const Topology& b) { return a.signature() == b.signature(); }

 private:
  Shape input_shape_;
  std::vector<LayerSpec> layers_;
  std::vector<std::size_t> searchable_;
  std::vector<std::vector<std::size_t>> offsets_;
  std::vector<ParamEntry> registry_;
  std::vector<Shape> shapes_;
};

/// Registry-aligned parameter tensors.
struct ParamSet {
  std::vector<Tensor> tensors;

  std::size_t size() const { return tensors.size(); }
  std::size_t scalar_count() const;
  bool all_finite() const;
  friend bool operator==(const ParamSet&, const ParamSet&) = default;
};

ParamSet zero_params(const Topology& topo);
/// He-normal weights for conv/dense kernels, zero biases. Deterministic in seed.
ParamSet init_params(const Topology& topo, std::uint64_t seed);

/// Builder for the standard search space: fixed conv stem, L searchable layers
/// with optional fixed 2x2 average-pool downsampling after chosen layers, and
/// a dense classifier.
struct SearchSpaceConfig {
  Shape input_shape{1, 8, 8};
  std::size_t num_classes = 6;
  std::size_t channels = 4;
  std::size_t num_layers = 6;
  std::vector<std::size_t> downsample_after{1};
  std::vector<std::string> candidates{"zero", "identity", "dwsep3x3_e1", "dwsep3x3_e3", "dwsep5x5_e3"};
};

std::shared_ptr<const Topology> build_search_space(const SearchSpaceConfig& cfg);

}  // namespace fdnas

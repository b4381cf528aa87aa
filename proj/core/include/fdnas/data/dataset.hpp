// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fdnas/nn/loss.hpp"
#include "fdnas/nn/tensor.hpp"

namespace fdnas {

/// Examples of one fixed shape stored contiguously, with class labels.
struct LabeledDataset {
  Shape example_shape;
  std::size_t num_classes = 0;
  std::vector<double> pixels;  // size() * shape_numel(example_shape) values
  std::vector<Label> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::span<const double> example(std::size_t i) const;

  /// Stacks the selected examples into [n, example_shape...].
  Tensor batch(std::span<const std::size_t> idx) const;
  std::vector<Label> batch_labels(std::span<const std::size_t> idx) const;
  Tensor all_examples() const;

  /// Throws ShapeError if sizes or labels are inconsistent.
  void validate() const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

LabeledDataset gather(const LabeledDataset& ds, std::span<const std::size_t> idx);
LabeledDataset concat(std::span<const LabeledDataset> parts);
std::vector<std::size_t> class_histogram(const LabeledDataset& ds);

struct SyntheticConfig {
  std::size_t num_classes = 6;
  Shape example_shape{1, 8, 8};
  std::size_t per_class = 120;
  double difficulty = 1.0;
  std::uint64_t seed = 0;
};

/// Smoothed unit-RMS random pattern per class.
std::vector<Tensor> synthetic_templates(const SyntheticConfig& cfg);

/// Each example is its class template plus difficulty * N(0, 1) noise per
/// value. Examples are ordered by class.
LabeledDataset generate_synthetic(const SyntheticConfig& cfg);

/// Flat dataset file: "FDNASDAT", u32 version, u32 rank, u64 extents,
/// u32 classes, u64 count, count * numel f64 values, count u32 labels.
/// Little-endian throughout.
std::vector<std::uint8_t> encode_dataset(const LabeledDataset& ds);
LabeledDataset decode_dataset(std::span<const std::uint8_t> bytes);
void save_dataset(const std::filesystem::path& path, const LabeledDataset& ds);
LabeledDataset load_dataset(const std::filesystem::path& path);

}  // namespace fdnas

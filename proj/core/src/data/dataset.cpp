// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/data/dataset.hpp"

#include <cmath>
#include <cstring>

#include "fdnas/error.hpp"
#include "fdnas/io/binary.hpp"
#include "fdnas/rng.hpp"

namespace fdnas {
namespace {

constexpr std::string_view kMagic = "FDNASDAT";
constexpr std::uint32_t kVersion = 1;

// 3x3 box filter over each spatial plane, averaging only in-bounds taps.
void box_smooth(Tensor& t) {
  const Shape& s = t.shape();
  if (s.size() != 3) return;
  const std::size_t C = s[0], H = s[1], W = s[2];
  Tensor out(s);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t y = 0; y < H; ++y) {
      for (std::size_t x = 0; x < W; ++x) {
        double sum = 0.0;
        int n = 0;
        for (std::size_t yy = (y == 0 ? 0 : y - 1); yy <= std::min(H - 1, y + 1); ++yy) {
          for (std::size_t xx = (x == 0 ? 0 : x - 1); xx <= std::min(W - 1, x + 1); ++xx) {
            sum += t[(c * H + yy) * W + xx];
            ++n;
          }
        }
        out[(c * H + y) * W + x] = sum / n;
      }
    }
  }
  t = std::move(out);
}

}  // namespace

std::span<const double> LabeledDataset::example(std::size_t i) const {
  const std::size_t n = shape_numel(example_shape);
  return std::span<const double>(pixels).subspan(i * n, n);
}

Tensor LabeledDataset::batch(std::span<const std::size_t> idx) const {
  if (idx.empty()) throw ArgumentError("batch: empty index list");
  const std::size_t n = shape_numel(example_shape);
  Shape shape{idx.size()};
  shape.insert(shape.end(), example_shape.begin(), example_shape.end());
  Tensor t(std::move(shape));
  for (std::size_t b = 0; b < idx.size(); ++b) {
    if (idx[b] >= size()) throw ArgumentError("batch: example index out of range");
    std::memcpy(t.data() + b * n, pixels.data() + idx[b] * n, n * sizeof(double));
  }
  return t;
}

std::vector<Label> LabeledDataset::batch_labels(std::span<const std::size_t> idx) const {
  std::vector<Label> out(idx.size());
  for (std::size_t b = 0; b < idx.size(); ++b) out[b] = labels.at(idx[b]);
  return out;
}

Tensor LabeledDataset::all_examples() const {
  std::vector<std::size_t> idx(size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return batch(idx);
}

void LabeledDataset::validate() const {
  if (example_shape.empty()) throw ShapeError("dataset: empty example shape");
  if (num_classes < 2) throw ShapeError("dataset: fewer than two classes");
  if (pixels.size() != labels.size() * shape_numel(example_shape)) {
    throw ShapeError("dataset: pixel count does not match example count");
  }
  for (auto l : labels) {
    if (l >= num_classes) throw ShapeError("dataset: label " + std::to_string(l) + " out of range");
  }
}

LabeledDataset gather(const LabeledDataset& ds, std::span<const std::size_t> idx) {
  LabeledDataset out{ds.example_shape, ds.num_classes, {}, {}};
  const std::size_t n = shape_numel(ds.example_shape);
  out.pixels.reserve(idx.size() * n);
  out.labels.reserve(idx.size());
  for (auto i : idx) {
    if (i >= ds.size()) throw ArgumentError("gather: example index out of range");
    auto ex = ds.example(i);
    out.pixels.insert(out.pixels.end(), ex.begin(), ex.end());
    out.labels.push_back(ds.labels[i]);
  }
  return out;
}

LabeledDataset concat(std::span<const LabeledDataset> parts) {
  if (parts.empty()) throw ArgumentError("concat: no datasets");
  LabeledDataset out{parts[0].example_shape, parts[0].num_classes, {}, {}};
  for (const auto& p : parts) {
    if (p.example_shape != out.example_shape || p.num_classes != out.num_classes) {
      throw ShapeError("concat: datasets disagree on shape or class count");
    }
    out.pixels.insert(out.pixels.end(), p.pixels.begin(), p.pixels.end());
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
  }
  return out;
}

std::vector<std::size_t> class_histogram(const LabeledDataset& ds) {
  std::vector<std::size_t> h(ds.num_classes, 0);
  for (auto l : ds.labels) ++h.at(l);
  return h;
}

std::vector<Tensor> synthetic_templates(const SyntheticConfig& cfg) {
  if (cfg.num_classes < 2) throw ArgumentError("synthetic: need at least two classes");
  if (cfg.example_shape.empty()) throw ShapeError("synthetic: degenerate example shape");
  Rng rng(derive_seed(cfg.seed, {stream::kData, 0}));
  std::vector<Tensor> templates;
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    Tensor t(cfg.example_shape);
    for (auto& v : t.values()) v = rng.normal();
    box_smooth(t);
    double ss = 0.0;
    for (auto v : t.values()) ss += v * v;
    const double rms = std::sqrt(ss / static_cast<double>(t.size()));
    for (auto& v : t.values()) v /= rms;
    templates.push_back(std::move(t));
  }
  return templates;
}

LabeledDataset generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.per_class == 0) throw ArgumentError("synthetic: per_class must be positive");
  if (!(cfg.difficulty >= 0.0) || !std::isfinite(cfg.difficulty)) {
    throw ArgumentError("synthetic: difficulty must be finite and non-negative");
  }
  const auto templates = synthetic_templates(cfg);
  Rng rng(derive_seed(cfg.seed, {stream::kData, 1}));
  LabeledDataset ds{cfg.example_shape, cfg.num_classes, {}, {}};
  const std::size_t n = shape_numel(cfg.example_shape);
  ds.pixels.reserve(cfg.num_classes * cfg.per_class * n);
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    for (std::size_t i = 0; i < cfg.per_class; ++i) {
      for (std::size_t j = 0; j < n; ++j) ds.pixels.push_back(templates[c][j] + cfg.difficulty * rng.normal());
      ds.labels.push_back(static_cast<Label>(c));
    }
  }
  return ds;
}

std::vector<std::uint8_t> encode_dataset(const LabeledDataset& ds) {
  ds.validate();
  io::ByteWriter w;
  w.raw(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(ds.example_shape.size()));
  for (auto d : ds.example_shape) w.u64(d);
  w.u32(static_cast<std::uint32_t>(ds.num_classes));
  w.u64(ds.size());
  w.f64s(ds.pixels);
  for (auto l : ds.labels) w.u32(l);
  return w.bytes();
}

LabeledDataset decode_dataset(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.raw(kMagic.size()) != kMagic) throw FormatError("not a dataset file (bad magic)");
  if (const auto v = r.u32(); v != kVersion) throw FormatError("unsupported dataset version " + std::to_string(v));
  LabeledDataset ds;
  const auto rank = r.u32();
  if (rank == 0 || rank > 8) throw FormatError("dataset: implausible rank");
  ds.example_shape.resize(rank);
  for (auto& d : ds.example_shape) {
    d = r.u64();
    if (d == 0 || d > (1u << 20)) throw FormatError("dataset: implausible extent");
  }
  ds.num_classes = r.u32();
  const auto count = r.u64();
  const std::size_t n = shape_numel(ds.example_shape);
  if (count > r.remaining() / (n * 8 + 4)) throw FormatError("dataset: payload truncated");
  ds.pixels.resize(count * n);
  r.f64s(ds.pixels);
  ds.labels.resize(count);
  for (auto& l : ds.labels) l = r.u32();
  if (!r.at_end()) throw FormatError("dataset: trailing bytes");
  try {
    ds.validate();
  } catch (const ShapeError& e) {
    throw FormatError(std::string("dataset: ") + e.what());
  }
  return ds;
}

void save_dataset(const std::filesystem::path& path, const LabeledDataset& ds) {
  io::write_file(path, encode_dataset(ds));
}

LabeledDataset load_dataset(const std::filesystem::path& path) { return decode_dataset(io::read_file(path)); }

}  // namespace fdnas

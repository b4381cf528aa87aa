// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/supernet/serialize.hpp"

#include "fdnas/error.hpp"

namespace fdnas {
namespace {

constexpr std::string_view kNetMagic = "FDNASNET";
constexpr std::uint32_t kNetVersion = 1;

enum class OpTag : std::uint8_t { kIdentity = 0, kZero, kDense, kConv, kDwSep, kAvgPool };

std::size_t read_size(io::ByteReader& r) {
  const std::uint64_t v = r.u64();
  if (v > (std::uint64_t{1} << 32)) throw FormatError("implausible size field " + std::to_string(v));
  return static_cast<std::size_t>(v);
}

}  // namespace

void write_op(io::ByteWriter& w, const OpKind& op) {
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Identity>) {
          w.u8(static_cast<std::uint8_t>(OpTag::kIdentity));
        } else if constexpr (std::is_same_v<T, Zero>) {
          w.u8(static_cast<std::uint8_t>(OpTag::kZero));
        } else if constexpr (std::is_same_v<T, Dense>) {
          w.u8(static_cast<std::uint8_t>(OpTag::kDense));
          w.u64(o.out_features);
        } else if constexpr (std::is_same_v<T, Conv>) {
          w.u8(static_cast<std::uint8_t>(OpTag::kConv));
          w.u64(o.kernel);
          w.u64(o.channels);
          w.u8(o.relu ? 1 : 0);
        } else if constexpr (std::is_same_v<T, DepthwiseSepConv>) {
          w.u8(static_cast<std::uint8_t>(OpTag::kDwSep));
          w.u64(o.kernel);
          w.u64(o.channels);
          w.u64(o.expansion);
        } else {
          w.u8(static_cast<std::uint8_t>(OpTag::kAvgPool));
          w.u64(o.kernel);
          w.u64(o.stride);
        }
      },
      op);
}

OpKind read_op(io::ByteReader& r) {
  switch (static_cast<OpTag>(r.u8())) {
    case OpTag::kIdentity:
      return Identity{};
    case OpTag::kZero:
      return Zero{};
    case OpTag::kDense:
      return Dense{read_size(r)};
    case OpTag::kConv: {
      Conv c;
      c.kernel = read_size(r);
      c.channels = read_size(r);
      c.relu = r.u8() != 0;
      return c;
    }
    case OpTag::kDwSep: {
      DepthwiseSepConv d;
      d.kernel = read_size(r);
      d.channels = read_size(r);
      d.expansion = read_size(r);
      return d;
    }
    case OpTag::kAvgPool: {
      AvgPool p;
      p.kernel = read_size(r);
      p.stride = read_size(r);
      return p;
    }
  }
  throw FormatError("unknown op tag");
}

void write_topology(io::ByteWriter& w, const Topology& topo) {
  w.u32(static_cast<std::uint32_t>(topo.input_shape().size()));
  for (auto d : topo.input_shape()) w.u64(d);
  w.u32(static_cast<std::uint32_t>(topo.size()));
  for (const auto& spec : topo.layers()) {
    w.u8(spec.def.searchable ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(spec.def.candidates.size()));
    for (const auto& op : spec.def.candidates) write_op(w, op);
  }
}

std::shared_ptr<const Topology> read_topology(io::ByteReader& r) {
  Shape input(r.u32());
  for (auto& d : input) d = read_size(r);
  std::vector<LayerDef> defs(r.u32());
  for (auto& def : defs) {
    def.searchable = r.u8() != 0;
    def.candidates.resize(r.u32());
    for (auto& op : def.candidates) op = read_op(r);
  }
  try {
    return std::make_shared<const Topology>(std::move(input), std::move(defs));
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("stored topology is invalid: ") + e.what());
  }
}

void write_tensor(io::ByteWriter& w, const Tensor& t) {
  w.u32(static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape()) w.u64(d);
  w.f64s(t.values());
}

Tensor read_tensor(io::ByteReader& r) {
  Shape shape(r.u32());
  std::size_t n = 1;
  for (auto& d : shape) {
    d = read_size(r);
    n *= d;
  }
  if (n * 8 > r.remaining()) throw FormatError("tensor payload truncated");
  try {
    Tensor t(shape);
    r.f64s(t.values());
    return t;
  } catch (const ShapeError& e) {
    throw FormatError(std::string("stored tensor is invalid: ") + e.what());
  }
}

void write_tensors(io::ByteWriter& w, std::span<const Tensor> ts) {
  w.u32(static_cast<std::uint32_t>(ts.size()));
  for (const auto& t : ts) write_tensor(w, t);
}

std::vector<Tensor> read_tensors(io::ByteReader& r) {
  std::vector<Tensor> ts(r.u32());
  for (auto& t : ts) t = read_tensor(r);
  return ts;
}

void write_optimizer(io::ByteWriter& w, const OptimizerState& s) {
  w.u8(static_cast<std::uint8_t>(s.kind));
  w.f64(s.sgd.momentum);
  w.f64(s.sgd.weight_decay);
  w.f64(s.adam.beta1);
  w.f64(s.adam.beta2);
  w.f64(s.adam.eps);
  write_tensors(w, s.first);
  write_tensors(w, s.second);
  w.u32(static_cast<std::uint32_t>(s.steps.size()));
  for (auto v : s.steps) w.u64(v);
}

OptimizerState read_optimizer(io::ByteReader& r) {
  OptimizerState s;
  const auto kind = r.u8();
  if (kind > 1) throw FormatError("unknown optimizer kind");
  s.kind = static_cast<OptimizerKind>(kind);
  s.sgd.momentum = r.f64();
  s.sgd.weight_decay = r.f64();
  s.adam.beta1 = r.f64();
  s.adam.beta2 = r.f64();
  s.adam.eps = r.f64();
  s.first = read_tensors(r);
  s.second = read_tensors(r);
  s.steps.resize(r.u32());
  for (auto& v : s.steps) v = r.u64();
  return s;
}

std::vector<std::uint8_t> encode_net_file(const NetFile& file) {
  io::ByteWriter w;
  w.raw(kNetMagic);
  w.u32(kNetVersion);
  w.u64(file.config_hash);
  w.u64(file.seed);
  write_topology(w, *file.net.topology);
  w.u32(static_cast<std::uint32_t>(file.net.choices.size()));
  for (auto c : file.net.choices) w.u64(c);
  write_tensors(w, file.net.weights.tensors);
  return w.bytes();
}

NetFile decode_net_file(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.raw(kNetMagic.size()) != kNetMagic) throw FormatError("not a normal-net file (bad magic)");
  const auto version = r.u32();
  if (version != kNetVersion) throw FormatError("unsupported normal-net file version " + std::to_string(version));
  NetFile f;
  f.config_hash = r.u64();
  f.seed = r.u64();
  f.net.topology = read_topology(r);
  f.net.choices.resize(r.u32());
  for (auto& c : f.net.choices) c = read_size(r);
  f.net.weights.tensors = read_tensors(r);
  if (!r.at_end()) throw FormatError("trailing bytes in normal-net file");
  const auto shapes = f.net.topology->param_shapes();
  if (shapes.size() != f.net.weights.size()) throw FormatError("normal-net weights do not match topology");
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (shapes[i] != f.net.weights.tensors[i].shape()) throw FormatError("normal-net weight shape mismatch");
  }
  return f;
}

void save_net_file(const std::filesystem::path& path, const NetFile& file) {
  io::write_file(path, encode_net_file(file));
}

NetFile load_net_file(const std::filesystem::path& path) { return decode_net_file(io::read_file(path)); }

}  // namespace fdnas

// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/federation/checkpoint.hpp"

#include "fdnas/error.hpp"
#include "fdnas/supernet/serialize.hpp"

namespace fdnas {
namespace {

constexpr std::string_view kMagic = "FDNASCKP";
constexpr std::uint32_t kVersion = 1;

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  const ServerState& s = ckpt.state;
  if (s.w_opts.size() != s.a_opts.size()) throw ArgumentError("checkpoint: optimizer state lists differ in length");
  io::ByteWriter w;
  w.raw(kMagic);
  w.u32(kVersion);
  w.u64(ckpt.config_hash);
  w.u64(ckpt.seed);
  w.u64(s.round);
  write_topology(w, s.net.topo());
  write_tensors(w, s.net.weights.tensors);
  write_tensors(w, s.arch.logits);
  w.u32(static_cast<std::uint32_t>(s.w_opts.size()));
  for (std::size_t i = 0; i < s.w_opts.size(); ++i) {
    write_optimizer(w, s.w_opts[i]);
    write_optimizer(w, s.a_opts[i]);
  }
  return w.bytes();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.raw(kMagic.size()) != kMagic) throw FormatError("not a checkpoint (bad magic)");
  if (const auto v = r.u32(); v != kVersion) throw FormatError("unsupported checkpoint version " + std::to_string(v));
  Checkpoint c;
  c.config_hash = r.u64();
  c.seed = r.u64();
  c.state.round = r.u64();
  c.state.net.topology = read_topology(r);
  c.state.net.weights.tensors = read_tensors(r);
  c.state.arch.logits = read_tensors(r);
  const auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    c.state.w_opts.push_back(read_optimizer(r));
    c.state.a_opts.push_back(read_optimizer(r));
  }
  if (!r.at_end()) throw FormatError("checkpoint: trailing bytes");
  const auto shapes = c.state.net.topo().param_shapes();
  if (shapes.size() != c.state.net.weights.size()) throw FormatError("checkpoint: weight count does not match topology");
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (shapes[i] != c.state.net.weights.tensors[i].shape()) throw FormatError("checkpoint: weight shape mismatch");
  }
  try {
    require_compatible(c.state.net.topo(), c.state.arch);
  } catch (const ShapeError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  io::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(io::read_file(path)); }

std::uint64_t checkpoint_digest(const Checkpoint& ckpt) { return io::fnv1a64(encode_checkpoint(ckpt)); }

}  // namespace fdnas

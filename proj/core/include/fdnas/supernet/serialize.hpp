// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>

#include "fdnas/io/binary.hpp"
#include "fdnas/nn/optim.hpp"
#include "fdnas/supernet/normal_net.hpp"

namespace fdnas {

void write_op(io::ByteWriter& w, const OpKind& op);
OpKind read_op(io::ByteReader& r);

void write_topology(io::ByteWriter& w, const Topology& topo);
std::shared_ptr<const Topology> read_topology(io::ByteReader& r);

void write_tensor(io::ByteWriter& w, const Tensor& t);
Tensor read_tensor(io::ByteReader& r);
void write_tensors(io::ByteWriter& w, std::span<const Tensor> ts);
std::vector<Tensor> read_tensors(io::ByteReader& r);

void write_optimizer(io::ByteWriter& w, const OptimizerState& s);
OptimizerState read_optimizer(io::ByteReader& r);

/// Normal-net file: "FDNASNET", u32 version, u64 config hash, u64 seed,
/// topology, choices, weights. All integers and doubles little-endian.
struct NetFile {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  NormalNet net;
};

std::vector<std::uint8_t> encode_net_file(const NetFile& file);
NetFile decode_net_file(std::span<const std::uint8_t> bytes);
void save_net_file(const std::filesystem::path& path, const NetFile& file);
NetFile load_net_file(const std::filesystem::path& path);

}  // namespace fdnas

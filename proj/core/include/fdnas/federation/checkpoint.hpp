// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fdnas/federation/server.hpp"

namespace fdnas {

/// Layout: "FDNASCKP", u32 version, u64 config hash, u64 seed, u64 round,
/// topology, weights, logits, u32 client count, per client the weight and
/// logit optimizer states. Little-endian; doubles as raw binary64.
struct Checkpoint {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  ServerState state;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// FNV-1a 64 of the encoded checkpoint.
std::uint64_t checkpoint_digest(const Checkpoint& ckpt);

}  // namespace fdnas

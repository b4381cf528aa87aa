// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "fdnas/data/dataset.hpp"

namespace fdnas {

/// A set of classes whose examples are dealt to a set of clients.
struct ShardGroup {
  std::vector<Label> classes;
  std::vector<std::size_t> clients;
  friend bool operator==(const ShardGroup&, const ShardGroup&) = default;
};

struct PartitionScheme {
  std::vector<ShardGroup> groups;

  /// Classes and clients cut into `num_groups` contiguous, near-equal blocks;
  /// class block g goes to client block g.
  static PartitionScheme label_shards(std::size_t num_classes, std::size_t num_clients, std::size_t num_groups);
  /// 10 classes over 10 clients: {0-2 -> 0-2, 3-5 -> 3-5, 6-9 -> 6-9}.
  static PartitionScheme cifar10_three_groups();

  /// Throws ArgumentError unless classes and clients are each covered exactly once.
  void validate(std::size_t num_classes, std::size_t num_clients) const;
  friend bool operator==(const PartitionScheme&, const PartitionScheme&) = default;
};

struct SplitFractions {
  double test = 0.1;  // carved from each client's pool first
  double val = 0.1;   // fraction of the remainder; the rest is train
};

struct ClientShards {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  std::size_t total() const { return train.size() + val.size() + test.size(); }
};

struct ShardPlan {
  std::size_t dataset_size = 0;
  std::vector<ClientShards> clients;

  /// Throws ArgumentError on out-of-range or repeated indices.
  void validate() const;
  /// True when every dataset index appears in exactly one shard.
  bool covers_dataset() const;
};

ShardPlan partition_noniid(const LabeledDataset& ds, std::size_t num_clients, const PartitionScheme& scheme,
                           std::uint64_t seed, SplitFractions split = {});
ShardPlan iid_partition(const LabeledDataset& ds, std::size_t num_clients, std::uint64_t seed,
                        SplitFractions split = {});

}  // namespace fdnas

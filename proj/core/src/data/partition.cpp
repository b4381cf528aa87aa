// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/data/partition.hpp"

#include <algorithm>
#include <cmath>

#include "fdnas/error.hpp"
#include "fdnas/rng.hpp"

namespace fdnas {
namespace {

std::vector<std::vector<std::size_t>> contiguous_blocks(std::size_t n, std::size_t parts) {
  std::vector<std::vector<std::size_t>> blocks(parts);
  std::size_t next = 0;
  for (std::size_t g = 0; g < parts; ++g) {
    const std::size_t len = n / parts + (g < n % parts ? 1 : 0);
    for (std::size_t i = 0; i < len; ++i) blocks[g].push_back(next++);
  }
  return blocks;
}

void check_split(const SplitFractions& s) {
  if (!(s.test >= 0.0 && s.test < 1.0)) throw ArgumentError("split: test fraction must lie in [0, 1)");
  if (!(s.val >= 0.0 && s.val < 1.0)) throw ArgumentError("split: val fraction must lie in [0, 1)");
}

std::size_t rounded(double x) { return static_cast<std::size_t>(std::llround(x)); }

// Pools arrive shuffled; carve test, then val, then train, and sort each.
ClientShards split_pool(const std::vector<std::size_t>& pool, const SplitFractions& s) {
  const std::size_t n_test = rounded(static_cast<double>(pool.size()) * s.test);
  const std::size_t rest = pool.size() - n_test;
  const std::size_t n_val = rounded(static_cast<double>(rest) * s.val);
  ClientShards c;
  c.test.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_test));
  c.val.assign(pool.begin() + static_cast<std::ptrdiff_t>(n_test),
               pool.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
  c.train.assign(pool.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), pool.end());
  std::sort(c.test.begin(), c.test.end());
  std::sort(c.val.begin(), c.val.end());
  std::sort(c.train.begin(), c.train.end());
  return c;
}

}  // namespace

PartitionScheme PartitionScheme::label_shards(std::size_t num_classes, std::size_t num_clients,
                                              std::size_t num_groups) {
  if (num_groups == 0 || num_groups > num_classes || num_groups > num_clients) {
    throw ArgumentError("label_shards: group count must be in [1, min(classes, clients)]");
  }
  const auto cls = contiguous_blocks(num_classes, num_groups);
  const auto cli = contiguous_blocks(num_clients, num_groups);
  PartitionScheme s;
  for (std::size_t g = 0; g < num_groups; ++g) {
    ShardGroup sg;
    for (auto c : cls[g]) sg.classes.push_back(static_cast<Label>(c));
    sg.clients = cli[g];
    s.groups.push_back(std::move(sg));
  }
  return s;
}

PartitionScheme PartitionScheme::cifar10_three_groups() {
  return PartitionScheme{{ShardGroup{{0, 1, 2}, {0, 1, 2}}, ShardGroup{{3, 4, 5}, {3, 4, 5}},
                          ShardGroup{{6, 7, 8, 9}, {6, 7, 8, 9}}}};
}

void PartitionScheme::validate(std::size_t num_classes, std::size_t num_clients) const {
  std::vector<int> class_seen(num_classes, 0), client_seen(num_clients, 0);
  for (const auto& g : groups) {
    if (g.classes.empty() || g.clients.empty()) throw ArgumentError("partition scheme: empty group");
    for (auto c : g.classes) {
      if (c >= num_classes) throw ArgumentError("partition scheme: unknown class " + std::to_string(c));
      ++class_seen[c];
    }
    for (auto k : g.clients) {
      if (k >= num_clients) throw ArgumentError("partition scheme: unknown client " + std::to_string(k));
      ++client_seen[k];
    }
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (class_seen[c] != 1) throw ArgumentError("partition scheme: class " + std::to_string(c) + " not covered exactly once");
  }
  for (std::size_t k = 0; k < num_clients; ++k) {
    if (client_seen[k] != 1) throw ArgumentError("partition scheme: client " + std::to_string(k) + " not covered exactly once");
  }
}

void ShardPlan::validate() const {
  std::vector<char> seen(dataset_size, 0);
  for (const auto& c : clients) {
    for (const auto* list : {&c.train, &c.val, &c.test}) {
      for (auto i : *list) {
        if (i >= dataset_size) throw ArgumentError("shard plan: index out of range");
        if (seen[i]) throw ArgumentError("shard plan: index " + std::to_string(i) + " assigned twice");
        seen[i] = 1;
      }
    }
  }
}

bool ShardPlan::covers_dataset() const {
  std::size_t n = 0;
  for (const auto& c : clients) n += c.total();
  return n == dataset_size;
}

ShardPlan partition_noniid(const LabeledDataset& ds, std::size_t num_clients, const PartitionScheme& scheme,
                           std::uint64_t seed, SplitFractions split) {
  if (num_clients == 0) throw ArgumentError("partition: need at least one client");
  check_split(split);
  scheme.validate(ds.num_classes, num_clients);
  Rng rng(derive_seed(seed, {stream::kPartition}));
  std::vector<std::vector<std::size_t>> pools(num_clients);
  for (const auto& g : scheme.groups) {
    std::vector<char> member(ds.num_classes, 0);
    for (auto c : g.classes) member[c] = 1;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (member[ds.labels[i]]) idx.push_back(i);
    }
    rng.shuffle(idx);
    for (std::size_t j = 0; j < idx.size(); ++j) pools[g.clients[j % g.clients.size()]].push_back(idx[j]);
  }
  ShardPlan plan;
  plan.dataset_size = ds.size();
  for (const auto& pool : pools) plan.clients.push_back(split_pool(pool, split));
  return plan;
}

ShardPlan iid_partition(const LabeledDataset& ds, std::size_t num_clients, std::uint64_t seed,
                        SplitFractions split) {
  if (num_clients == 0) throw ArgumentError("partition: need at least one client");
  check_split(split);
  Rng rng(derive_seed(seed, {stream::kPartition}));
  std::vector<std::size_t> idx(ds.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(idx);
  std::vector<std::vector<std::size_t>> pools(num_clients);
  for (std::size_t j = 0; j < idx.size(); ++j) pools[j % num_clients].push_back(idx[j]);
  ShardPlan plan;
  plan.dataset_size = ds.size();
  for (const auto& pool : pools) plan.clients.push_back(split_pool(pool, split));
  return plan;
}

}  // namespace fdnas

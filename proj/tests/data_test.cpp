// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fdnas/data/dataset.hpp"
#include "fdnas/data/partition.hpp"
#include "fdnas/error.hpp"

namespace fdnas {
namespace {

LabeledDataset small_synthetic(std::size_t classes, std::size_t per_class, std::uint64_t seed) {
  SyntheticConfig c;
  c.num_classes = classes;
  c.per_class = per_class;
  c.seed = seed;
  return generate_synthetic(c);
}

std::set<Label> labels_of(const LabeledDataset& ds, const ClientShards& s) {
  std::set<Label> out;
  for (const auto* part : {&s.train, &s.val, &s.test}) {
    for (std::size_t i : *part) out.insert(ds.labels[i]);
  }
  return out;
}

TEST(Synthetic, DeterministicClassOrderedAndBalanced) {
  const auto a = small_synthetic(6, 20, 3);
  EXPECT_EQ(a, small_synthetic(6, 20, 3));
  EXPECT_NE(a, small_synthetic(6, 20, 4));
  EXPECT_EQ(a.size(), 120u);
  EXPECT_EQ(class_histogram(a), std::vector<std::size_t>(6, 20));
  EXPECT_TRUE(std::is_sorted(a.labels.begin(), a.labels.end()));
  EXPECT_NO_THROW(a.validate());
}

TEST(Synthetic, TemplatesHaveUnitRms) {
  SyntheticConfig c;
  c.seed = 5;
  for (const Tensor& t : synthetic_templates(c)) {
    double ss = 0.0;
    for (double v : t.values()) ss += v * v;
    EXPECT_NEAR(std::sqrt(ss / static_cast<double>(t.size())), 1.0, 1e-12);
  }
}

TEST(Synthetic, ZeroDifficultyReproducesTemplates) {
  SyntheticConfig c;
  c.per_class = 2;
  c.difficulty = 0.0;
  c.seed = 2;
  const auto ds = generate_synthetic(c);
  const auto templates = synthetic_templates(c);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto ex = ds.example(i);
    const Tensor& t = templates[ds.labels[i]];
    for (std::size_t j = 0; j < ex.size(); ++j) EXPECT_EQ(ex[j], t[j]);
  }
}

TEST(Dataset, BatchGatherConcat) {
  const auto ds = small_synthetic(3, 4, 1);
  const std::vector<std::size_t> idx{5, 0, 11};
  const Tensor b = ds.batch(idx);
  EXPECT_EQ(b.shape(), (Shape{3, 1, 8, 8}));
  EXPECT_EQ(b[64], ds.example(0)[0]);
  EXPECT_EQ(ds.batch_labels(idx), (std::vector<Label>{1, 0, 2}));
  const auto g = gather(ds, idx);
  const std::vector<LabeledDataset> parts{g, g};
  EXPECT_EQ(concat(parts).size(), 6u);
  EXPECT_THROW(ds.batch(std::vector<std::size_t>{99}), ArgumentError);
}

TEST(Dataset, FileRoundTripAndCorruption) {
  const auto ds = small_synthetic(3, 5, 9);
  const auto bytes = encode_dataset(ds);
  EXPECT_EQ(decode_dataset(bytes), ds);
  auto bad = bytes;
  bad[2] ^= 1;
  EXPECT_THROW(decode_dataset(bad), FormatError);
  EXPECT_THROW(decode_dataset(std::span(bytes).first(bytes.size() - 3)), FormatError);
}

TEST(Partition, LabelShardBlocks) {
  const auto s = PartitionScheme::label_shards(6, 6, 3);
  ASSERT_EQ(s.groups.size(), 3u);
  EXPECT_EQ(s.groups[1].classes, (std::vector<Label>{2, 3}));
  EXPECT_EQ(s.groups[1].clients, (std::vector<std::size_t>{2, 3}));
  const auto c = PartitionScheme::cifar10_three_groups();
  EXPECT_EQ(c.groups[2].classes, (std::vector<Label>{6, 7, 8, 9}));
  EXPECT_EQ(c.groups[2].clients, (std::vector<std::size_t>{6, 7, 8, 9}));
  EXPECT_NO_THROW(c.validate(10, 10));
}

TEST(Partition, InvalidSchemesAreRejected) {
  PartitionScheme overlap{{{{0, 1}, {0}}, {{1, 2}, {1}}}};
  EXPECT_THROW(overlap.validate(3, 2), ArgumentError);
  PartitionScheme missing{{{{0}, {0}}, {{1}, {1}}}};
  EXPECT_THROW(missing.validate(3, 2), ArgumentError);
}

TEST(Partition, NonIidLabelSupportsCoversAndSplits) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto ds = small_synthetic(10, 50, seed);
    const auto scheme = PartitionScheme::cifar10_three_groups();
    const ShardPlan plan = partition_noniid(ds, 10, scheme, seed);
    EXPECT_NO_THROW(plan.validate());
    EXPECT_TRUE(plan.covers_dataset());
    for (const ShardGroup& g : scheme.groups) {
      const std::set<Label> want(g.classes.begin(), g.classes.end());
      for (std::size_t c : g.clients) EXPECT_EQ(labels_of(ds, plan.clients[c]), want) << "client " << c;
    }
    for (const ClientShards& c : plan.clients) {
      const double pool = static_cast<double>(c.total());
      EXPECT_LE(std::abs(static_cast<double>(c.test.size()) - 0.1 * pool), 1.0);
      const double rest = static_cast<double>(c.train.size() + c.val.size());
      EXPECT_LE(std::abs(static_cast<double>(c.val.size()) - 0.1 * rest), 1.0);
      EXPECT_TRUE(std::is_sorted(c.train.begin(), c.train.end()));
    }
  }
}

TEST(Partition, ClientSizesWithinAGroupDifferByAtMostOne) {
  const auto ds = small_synthetic(6, 31, 4);
  const ShardPlan plan = partition_noniid(ds, 6, PartitionScheme::label_shards(6, 6, 3), 4);
  for (std::size_t g = 0; g < 3; ++g) {
    const auto a = plan.clients[2 * g].total(), b = plan.clients[2 * g + 1].total();
    EXPECT_LE(a > b ? a - b : b - a, 1u);
    EXPECT_EQ(a + b, 62u);
  }
}

TEST(Partition, IidIsADisjointCoverAndSeedDeterministic) {
  const auto ds = small_synthetic(6, 30, 5);
  const ShardPlan a = iid_partition(ds, 6, 5);
  EXPECT_TRUE(a.covers_dataset());
  EXPECT_EQ(iid_partition(ds, 6, 5).clients[0].train, a.clients[0].train);
  EXPECT_NE(iid_partition(ds, 6, 6).clients[0].train, a.clients[0].train);
}

TEST(Partition, CoverDetectsDuplicates) {
  ShardPlan p;
  p.dataset_size = 3;
  p.clients = {{{0, 1}, {}, {}}, {{1, 2}, {}, {}}};
  EXPECT_THROW(p.validate(), ArgumentError);
  EXPECT_FALSE(p.covers_dataset());
}

}  // namespace
}  // namespace fdnas

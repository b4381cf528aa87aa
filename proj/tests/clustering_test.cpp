// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "fdnas/clustering/cluster.hpp"
#include "fdnas/error.hpp"
#include "fdnas/harness/config.hpp"
#include "fdnas/supernet/normal_net.hpp"

namespace fdnas {
namespace {

struct Fixture {
  ExperimentConfig cfg;
  Experiment x;
  RunResult search;
};

Fixture make_fixture() {
  Fixture f;
  f.cfg.data.synthetic.per_class = 30;
  f.cfg.space.num_layers = 3;
  f.cfg.search.rounds = 3;
  f.cfg.search.local_epochs = 1;
  f.x = prepare_experiment(f.cfg);
  for (ClientData& c : f.x.clients) {
    c.hardware = c.id < 3 ? "gpu" : "cpu";
    c.tag = c.id % 2 == 0 ? "even" : "odd";
  }
  f.search = run_fdnas(f.x.topology, f.x.clients, search_federation(f.cfg));
  return f;
}

const Fixture& fixture() {
  static const Fixture f = make_fixture();
  return f;
}

TEST(Clusters, SplitByKeyOrderedBySmallestMember) {
  const auto& f = fixture();
  const ClusterSpec hw = split_clusters(f.x.clients, ClusterKey::kHardware, 4);
  ASSERT_EQ(hw.groups.size(), 2u);
  EXPECT_EQ(hw.groups[0].members, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(hw.groups[0].key, "gpu");
  EXPECT_EQ(hw.groups[0].hardware, "gpu");
  EXPECT_EQ(hw.groups[1].budget, 4u);
  const ClusterSpec tag = split_clusters(f.x.clients, ClusterKey::kTag, 1);
  EXPECT_EQ(tag.groups[0].members, (std::vector<std::size_t>{0, 2, 4}));
  EXPECT_EQ(tag.groups[1].key, "odd");
  EXPECT_EQ(tag.groups[1].hardware, "");
}

TEST(Clusters, SpecValidation) {
  const std::vector<std::size_t> ids{0, 1, 2};
  ClusterSpec overlap{{{{0, 1}, "a", "", 1}, {{1, 2}, "b", "", 1}}};
  EXPECT_THROW(overlap.validate(ids), ArgumentError);
  ClusterSpec missing{{{{0, 1}, "a", "", 1}}};
  EXPECT_THROW(missing.validate(ids), ArgumentError);
  ClusterSpec ok{{{{0, 2}, "a", "", 1}, {{1}, "b", "", 1}}};
  EXPECT_NO_THROW(ok.validate(ids));
}

TEST(Clusters, ProfileParsing) {
  const std::string good = "client_id,tag,hardware\n# note\n1,b,cpu\n0,a,gpu\n";
  const auto p = parse_client_profiles(good, 2);
  ASSERT_EQ(p.size(), 2u);
  std::vector<ClientData> clients(2);
  clients[0].id = 0;
  clients[1].id = 1;
  apply_profiles(clients, p);
  EXPECT_EQ(clients[0].hardware, "gpu");
  EXPECT_EQ(clients[1].tag, "b");
  EXPECT_THROW(parse_client_profiles("id,tag,hw\n0,a,gpu\n", 1), FormatError);
  EXPECT_THROW(parse_client_profiles("client_id,tag,hardware\n0,a,gpu\n", 2), FormatError);
  EXPECT_THROW(parse_client_profiles("client_id,tag,hardware\n0,a,gpu\n0,a,gpu\n", 1), FormatError);
  EXPECT_THROW(parse_client_profiles("client_id,tag,hardware\n5,a,gpu\n", 1), FormatError);
}

TEST(Cfdnas, BudgetZeroReproducesTheInheritedDerivation) {
  const auto& f = fixture();
  const ClusterSpec spec = split_clusters(f.x.clients, ClusterKey::kHardware, 0);
  const NormalNet want = derive_normal_net(f.search.state.net, f.search.state.arch);
  const auto groups = run_cfdnas(f.search.state, spec, f.x.clients, cluster_federation(f.cfg, nullptr));
  ASSERT_EQ(groups.size(), 2u);
  for (const GroupResult& g : groups) {
    EXPECT_EQ(g.derived.choices, want.choices);
    EXPECT_EQ(g.derived.weights, want.weights);
    EXPECT_TRUE(g.history.empty());
    EXPECT_EQ(g.state.arch, f.search.state.arch);
  }
}

TEST(Cfdnas, GroupsRefineIndependentlyAndDeterministically) {
  const auto& f = fixture();
  const ClusterSpec spec = split_clusters(f.x.clients, ClusterKey::kHardware, 2);
  const GroupSearchConfig g = cluster_federation(f.cfg, nullptr);
  const auto a = run_cfdnas(f.search.state, spec, f.x.clients, g);
  const auto b = run_cfdnas(f.search.state, spec, f.x.clients, g);
  ASSERT_EQ(a.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_TRUE(a[k].state == b[k].state);
    EXPECT_EQ(a[k].history.size(), 2u);
    EXPECT_EQ(a[k].state.w_opts.size(), 3u);
  }
  EXPECT_NE(a[0].state.net.weights, a[1].state.net.weights);
  const auto naive = naive_group_search(f.x.topology, spec, f.x.clients, g);
  EXPECT_NE(naive[0].state.net.weights, a[0].state.net.weights);
}

TEST(Cfdnas, StrictAggregationChangesOutputs) {
  const auto& f = fixture();
  const ClusterSpec spec = split_clusters(f.x.clients, ClusterKey::kHardware, 1);
  GroupSearchConfig g = cluster_federation(f.cfg, nullptr);
  const auto plain = run_cfdnas(f.search.state, spec, f.x.clients, g);
  g.strict_paper_aggregation = true;
  const auto strict = run_cfdnas(f.search.state, spec, f.x.clients, g);
  EXPECT_NE(plain[0].state.net.weights, strict[0].state.net.weights);
}

TEST(Cfdnas, LatencyWeightNeedsAGroupTable) {
  const auto& f = fixture();
  const ClusterSpec spec = split_clusters(f.x.clients, ClusterKey::kHardware, 1);
  GroupSearchConfig g = cluster_federation(f.cfg, nullptr);
  g.federation.local.latency_weight = 0.1;
  EXPECT_THROW(run_cfdnas(f.search.state, spec, f.x.clients, g), ConfigError);
  const auto counts = f.x.topology->candidate_counts();
  std::map<std::string, LatencyTable> tables;
  for (const char* name : {"gpu", "cpu"}) {
    std::vector<std::vector<double>> ms;
    for (std::size_t n : counts) ms.emplace_back(n, 1.0);
    tables.emplace(name, LatencyTable(name, ms));
  }
  g.latency_tables = &tables;
  EXPECT_NO_THROW(run_cfdnas(f.search.state, spec, f.x.clients, g));
}

TEST(Cfdnas, RoundsToTarget) {
  std::vector<RoundMetrics> h(3);
  for (std::size_t i = 0; i < h.size(); ++i) h[i].round = i + 1;
  h[0].val_loss = 0.5;
  h[1].val_loss = 0.3;
  h[2].val_loss = 0.1;
  EXPECT_EQ(rounds_to_target(h, 0.6), 1u);
  EXPECT_EQ(rounds_to_target(h, 0.3), 2u);
  EXPECT_EQ(rounds_to_target(h, 0.01), 4u);
  EXPECT_EQ(rounds_to_target({}, 1.0), 1u);
}

}  // namespace
}  // namespace fdnas

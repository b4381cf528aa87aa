// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fdnas/federation/server.hpp"
#include "fdnas/supernet/normal_net.hpp"

namespace fdnas {

enum class ClusterKey { kTag, kHardware };

struct ClusterGroup {
  std::vector<std::size_t> members;  // client ids, ascending
  std::string key;                   // shared tag or hardware value
  std::string hardware;              // profile used for the latency term; empty if members disagree
  std::size_t budget = 0;            // refinement rounds
  friend bool operator==(const ClusterGroup&, const ClusterGroup&) = default;
};

struct ClusterSpec {
  std::vector<ClusterGroup> groups;

  /// Throws ArgumentError unless the groups are non-empty, disjoint and
  /// cover exactly `client_ids`.
  void validate(std::span<const std::size_t> client_ids) const;
};

/// Equivalence classes of the chosen key, ordered by smallest member id.
ClusterSpec split_clusters(std::span<const ClientData> clients, ClusterKey key, std::size_t budget);

struct ClientProfile {
  std::size_t id = 0;
  std::string tag;
  std::string hardware;
};

/// CSV with header "client_id,tag,hardware"; '#' starts a comment line.
/// Every id in [0, num_clients) must appear exactly once.
std::vector<ClientProfile> parse_client_profiles(std::string_view text, std::size_t num_clients);
std::vector<ClientProfile> load_client_profiles(const std::filesystem::path& path, std::size_t num_clients);
void apply_profiles(std::span<ClientData> clients, std::span<const ClientProfile> profiles);

struct GroupSearchConfig {
  FederationConfig federation;  // rounds is ignored; each group uses its budget
  const std::map<std::string, LatencyTable>* latency_tables = nullptr;
  /// Divide by the total over all clients instead of the group total.
  bool strict_paper_aggregation = false;
};

struct GroupResult {
  std::size_t group = 0;
  ServerState state;
  NormalNet derived;
  std::vector<RoundMetrics> history;
};

/// Refines a copy of `inherited` independently for every group.
std::vector<GroupResult> run_cfdnas(const ServerState& inherited, const ClusterSpec& spec,
                                    std::span<const ClientData> clients, const GroupSearchConfig& cfg);

/// Same refinement loop, starting every group from a fresh initialization.
std::vector<GroupResult> naive_group_search(std::shared_ptr<const Topology> topo, const ClusterSpec& spec,
                                            std::span<const ClientData> clients, const GroupSearchConfig& cfg);

/// First round whose mean val loss is <= target, or history.size() + 1.
std::size_t rounds_to_target(std::span<const RoundMetrics> history, double target);

}  // namespace fdnas

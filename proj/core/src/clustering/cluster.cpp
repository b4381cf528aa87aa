// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/clustering/cluster.hpp"

#include <algorithm>
#include <sstream>

#include "fdnas/error.hpp"
#include "fdnas/io/binary.hpp"

namespace fdnas {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto p = line.find(',', start);
    out.push_back(trim(line.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start)));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

std::vector<const ClientData*> members_of(const ClusterGroup& g, std::span<const ClientData> clients) {
  std::vector<const ClientData*> out;
  for (auto id : g.members) {
    auto it = std::find_if(clients.begin(), clients.end(), [&](const ClientData& c) { return c.id == id; });
    if (it == clients.end()) throw ArgumentError("cluster: unknown client id " + std::to_string(id));
    out.push_back(&*it);
  }
  return out;
}

GroupResult refine_group(std::size_t gi, ServerState start, const ClusterGroup& group,
                         std::span<const ClientData> clients, const GroupSearchConfig& cfg) {
  const auto ptrs = members_of(group, clients);
  std::vector<ClientData> members;
  for (const auto* p : ptrs) members.push_back(*p);

  FederationConfig fc = cfg.federation;
  fc.rounds = group.budget;
  fc.local.schedule_rounds = 0;
  fc.seed = derive_seed(cfg.federation.seed, {stream::kGroup});
  fc.local.latency = nullptr;
  if (cfg.latency_tables != nullptr && !group.hardware.empty()) {
    auto it = cfg.latency_tables->find(group.hardware);
    if (it != cfg.latency_tables->end()) fc.local.latency = &it->second;
  }
  if (fc.local.latency_weight != 0.0 && fc.local.latency == nullptr) {
    throw ConfigError("cluster: group " + std::to_string(gi) + " (hardware '" + group.hardware +
                      "') has no latency table but the latency weight is non-zero");
  }
  if (fc.local.latency != nullptr) fc.local.latency->require_covers(start.net.topo().candidate_counts());
  if (cfg.strict_paper_aggregation) {
    double all = 0.0;
    for (const auto& c : clients) all += static_cast<double>(c.num_examples());
    fc.aggregation_denominator = all;
  } else {
    fc.aggregation_denominator = 0.0;
  }
  start = restart_server(start, members.size(), fc.local.sgd, fc.local.adam);
  auto run = run_rounds(std::move(start), members, fc);
  GroupResult r;
  r.group = gi;
  r.derived = derive_normal_net(run.state.net, run.state.arch);
  r.state = std::move(run.state);
  r.history = std::move(run.history);
  return r;
}

}  // namespace

void ClusterSpec::validate(std::span<const std::size_t> client_ids) const {
  std::vector<std::size_t> seen;
  for (const auto& g : groups) {
    if (g.members.empty()) throw ArgumentError("cluster spec: empty group");
    seen.insert(seen.end(), g.members.begin(), g.members.end());
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) throw ArgumentError("cluster spec: groups overlap");
  std::vector<std::size_t> ids(client_ids.begin(), client_ids.end());
  std::sort(ids.begin(), ids.end());
  if (seen != ids) throw ArgumentError("cluster spec: groups do not cover the client set exactly");
}

ClusterSpec split_clusters(std::span<const ClientData> clients, ClusterKey key, std::size_t budget) {
  std::map<std::string, std::vector<std::size_t>> by_key;
  for (const auto& c : clients) {
    const std::string& k = key == ClusterKey::kTag ? c.tag : c.hardware;
    if (k.empty()) {
      throw ArgumentError("cluster: client " + std::to_string(c.id) + " has no " +
                          (key == ClusterKey::kTag ? "tag" : "hardware profile"));
    }
    by_key[k].push_back(c.id);
  }
  ClusterSpec spec;
  for (auto& [k, ids] : by_key) {
    std::sort(ids.begin(), ids.end());
    ClusterGroup g;
    g.members = ids;
    g.key = k;
    g.budget = budget;
    spec.groups.push_back(std::move(g));
  }
  std::sort(spec.groups.begin(), spec.groups.end(),
            [](const ClusterGroup& a, const ClusterGroup& b) { return a.members.front() < b.members.front(); });
  for (auto& g : spec.groups) {
    std::string hw;
    bool uniform = true;
    for (const auto& c : clients) {
      if (std::find(g.members.begin(), g.members.end(), c.id) == g.members.end()) continue;
      if (hw.empty()) {
        hw = c.hardware;
      } else if (c.hardware != hw) {
        uniform = false;
      }
    }
    g.hardware = uniform ? hw : std::string();
  }
  return spec;
}

std::vector<ClientProfile> parse_client_profiles(std::string_view text, std::size_t num_clients) {
  std::vector<ClientProfile> out(num_clients);
  std::vector<char> seen(num_clients, 0);
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cols = split_csv(t);
    if (!header) {
      if (cols != std::vector<std::string>{"client_id", "tag", "hardware"}) {
        throw FormatError("client profiles: expected header 'client_id,tag,hardware'");
      }
      header = true;
      continue;
    }
    const std::string where = "client profiles line " + std::to_string(lineno);
    if (cols.size() != 3) throw FormatError(where + ": expected 3 columns");
    std::size_t id = 0;
    try {
      std::size_t used = 0;
      id = std::stoul(cols[0], &used);
      if (used != cols[0].size()) throw std::invalid_argument("id");
    } catch (const std::exception&) {
      throw FormatError(where + ": bad client id '" + cols[0] + "'");
    }
    if (id >= num_clients) throw FormatError(where + ": client id out of range");
    if (seen[id]) throw FormatError(where + ": duplicate client id");
    if (cols[1].empty() || cols[2].empty()) throw FormatError(where + ": empty tag or hardware");
    seen[id] = 1;
    out[id] = ClientProfile{id, cols[1], cols[2]};
  }
  if (!header) throw FormatError("client profiles: missing header");
  for (std::size_t i = 0; i < num_clients; ++i) {
    if (!seen[i]) throw FormatError("client profiles: missing client " + std::to_string(i));
  }
  return out;
}

std::vector<ClientProfile> load_client_profiles(const std::filesystem::path& path, std::size_t num_clients) {
  return parse_client_profiles(io::read_text_file(path), num_clients);
}

void apply_profiles(std::span<ClientData> clients, std::span<const ClientProfile> profiles) {
  for (auto& c : clients) {
    if (c.id >= profiles.size()) throw ArgumentError("no profile for client " + std::to_string(c.id));
    c.tag = profiles[c.id].tag;
    c.hardware = profiles[c.id].hardware;
  }
}

std::vector<GroupResult> run_cfdnas(const ServerState& inherited, const ClusterSpec& spec,
                                    std::span<const ClientData> clients, const GroupSearchConfig& cfg) {
  std::vector<std::size_t> ids;
  for (const auto& c : clients) ids.push_back(c.id);
  spec.validate(ids);
  std::vector<GroupResult> out;
  for (std::size_t g = 0; g < spec.groups.size(); ++g) out.push_back(refine_group(g, inherited, spec.groups[g], clients, cfg));
  return out;
}

std::vector<GroupResult> naive_group_search(std::shared_ptr<const Topology> topo, const ClusterSpec& spec,
                                            std::span<const ClientData> clients, const GroupSearchConfig& cfg) {
  std::vector<std::size_t> ids;
  for (const auto& c : clients) ids.push_back(c.id);
  spec.validate(ids);
  std::vector<GroupResult> out;
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    auto fresh = init_server(topo, derive_seed(cfg.federation.seed, {stream::kGroup, g}), 0, cfg.federation.local.sgd,
                             cfg.federation.local.adam);
    out.push_back(refine_group(g, std::move(fresh), spec.groups[g], clients, cfg));
  }
  return out;
}

std::size_t rounds_to_target(std::span<const RoundMetrics> history, double target) {
  for (const auto& m : history) {
    if (m.val_loss <= target) return m.round;
  }
  return history.size() + 1;
}

}  // namespace fdnas

// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "fdnas/federation/client.hpp"
#include "fdnas/federation/evaluate.hpp"
#include "fdnas/federation/metrics.hpp"

namespace fdnas {

struct FederationConfig {
  std::size_t rounds = 40;
  LocalTraining local;
  double participation = 1.0;
  std::size_t threads = 1;
  std::uint64_t seed = 0;
  /// Aggregation denominator; 0 means the participating clients' total.
  double aggregation_denominator = 0.0;
  /// Score the argmax-derived global net on pooled test data every N rounds
  /// (0 disables). The mean local accuracy is added when eval_local is set.
  std::size_t eval_every = 0;
  bool eval_local = false;
  EvalOptions local_eval;
};

/// Global model plus each client's persistent optimizer state, indexed by
/// position in the client list.
struct ServerState {
  SuperNet net;
  ArchParams arch;
  std::size_t round = 0;
  std::vector<OptimizerState> w_opts;
  std::vector<OptimizerState> a_opts;

  friend bool operator==(const ServerState& a, const ServerState& b) {
    return a.net.topo() == b.net.topo() && a.net.weights == b.net.weights && a.arch == b.arch &&
           a.round == b.round && a.w_opts == b.w_opts && a.a_opts == b.a_opts;
  }
};

ServerState init_server(std::shared_ptr<const Topology> topo, std::uint64_t seed, std::size_t num_clients,
                        const SgdConfig& sgd, const AdamConfig& adam);
/// Same globals with fresh optimizer state for `num_clients` clients.
ServerState restart_server(const ServerState& from, std::size_t num_clients, const SgdConfig& sgd,
                           const AdamConfig& adam);

struct RunResult {
  ServerState state;
  std::vector<RoundMetrics> history;
};

using RoundCallback = std::function<void(const ServerState&, const RoundMetrics&)>;

/// Clients selected for a round, in ascending position order.
std::vector<std::size_t> select_participants(std::size_t num_clients, double fraction, std::uint64_t seed,
                                             std::size_t round);

/// Continues from state.round up to cfg.rounds: broadcast globals, run the
/// selected clients' updates (possibly concurrently), aggregate at a barrier.
/// The observer may be invoked from worker threads but never concurrently.
RunResult run_rounds(ServerState state, std::span<const ClientData> clients, const FederationConfig& cfg,
                     const StepObserver* observer = nullptr, const RoundCallback* on_round = nullptr);

/// Fresh initialization followed by run_rounds.
RunResult run_fdnas(std::shared_ptr<const Topology> topo, std::span<const ClientData> clients,
                    const FederationConfig& cfg, const StepObserver* observer = nullptr);

}  // namespace fdnas

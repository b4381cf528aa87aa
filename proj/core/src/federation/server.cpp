// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/federation/server.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>

#include "fdnas/error.hpp"
#include "fdnas/parallel.hpp"

namespace fdnas {

ServerState init_server(std::shared_ptr<const Topology> topo, std::uint64_t seed, std::size_t num_clients,
                        const SgdConfig& sgd, const AdamConfig& adam) {
  ServerState s;
  s.net = SuperNet::create(topo, seed);
  s.arch = uniform_arch(*topo);
  s.w_opts.assign(num_clients, OptimizerState::make_sgd(sgd));
  s.a_opts.assign(num_clients, OptimizerState::make_adam(adam));
  return s;
}

ServerState restart_server(const ServerState& from, std::size_t num_clients, const SgdConfig& sgd,
                           const AdamConfig& adam) {
  ServerState s;
  s.net = from.net;
  s.arch = from.arch;
  s.w_opts.assign(num_clients, OptimizerState::make_sgd(sgd));
  s.a_opts.assign(num_clients, OptimizerState::make_adam(adam));
  return s;
}

std::vector<std::size_t> select_participants(std::size_t num_clients, double fraction, std::uint64_t seed,
                                             std::size_t round) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ArgumentError("participation fraction must lie in (0, 1]");
  std::vector<std::size_t> all(num_clients);
  for (std::size_t i = 0; i < num_clients; ++i) all[i] = i;
  if (fraction == 1.0) return all;
  const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * num_clients)));
  Rng rng(derive_seed(seed, {stream::kParticipation, round}));
  rng.shuffle(all);
  all.resize(m);
  std::sort(all.begin(), all.end());
  return all;
}

RunResult run_rounds(ServerState state, std::span<const ClientData> clients, const FederationConfig& cfg,
                     const StepObserver* observer, const RoundCallback* on_round) {
  if (clients.empty()) throw ArgumentError("federation: no clients");
  if (state.w_opts.size() != clients.size() || state.a_opts.size() != clients.size()) {
    throw ArgumentError("federation: optimizer state count does not match client count");
  }
  if (state.round > cfg.rounds) throw ArgumentError("federation: state is past the configured round count");
  require_compatible(state.net.topo(), state.arch);

  std::mutex observer_mu;
  StepObserver guarded;
  if (observer != nullptr && *observer) {
    guarded = [&](const StepRecord& r) {
      std::lock_guard<std::mutex> lock(observer_mu);
      (*observer)(r);
    };
  }
  LocalTraining local = cfg.local;
  if (local.schedule_rounds == 0) local.schedule_rounds = cfg.rounds;
  LabeledDataset pooled_test;
  if (cfg.eval_every > 0) {
    std::vector<LabeledDataset> parts;
    for (const auto& c : clients) parts.push_back(c.test);
    pooled_test = concat(parts);
  }

  RunResult out;
  while (state.round < cfg.rounds) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t t = state.round;
    const auto selected = select_participants(clients.size(), cfg.participation, cfg.seed, t);
    std::vector<ClientResult> results(selected.size());
    parallel_for(selected.size(), cfg.threads, [&](std::size_t i) {
      const std::size_t k = selected[i];
      results[i] = client_update(state.net, state.arch, clients[k], state.w_opts[k], state.a_opts[k], local, t,
                                 cfg.seed, guarded ? &guarded : nullptr);
    });
    std::vector<ModelUpdate> updates;
    std::vector<double> sizes;
    RoundMetrics m;
    for (std::size_t i = 0; i < selected.size(); ++i) {
      sizes.push_back(static_cast<double>(clients[selected[i]].num_examples()));
      m.train_loss += results[i].stats.train_loss;
      m.val_loss += results[i].stats.val_loss;
      updates.push_back(std::move(results[i].update));
    }
    m.train_loss /= static_cast<double>(selected.size());
    m.val_loss /= static_cast<double>(selected.size());
    auto agg = aggregate(updates, sizes, cfg.aggregation_denominator);
    state.net.weights = std::move(agg.weights);
    state.arch = std::move(agg.arch);
    ++state.round;
    m.round = state.round;
    if (local.latency != nullptr && state.net.topo().num_searchable() > 0) {
      m.expected_latency_ms = expected_latency(state.arch, *local.latency).ms;
    }
    if (cfg.eval_every > 0 && (state.round % cfg.eval_every == 0 || state.round == cfg.rounds)) {
      const auto derived = derive_normal_net(state.net, state.arch);
      m.fed_avg_acc = accuracy(derived, pooled_test);
      if (cfg.eval_local) m.mean_local_acc = evaluate(derived, clients, cfg.local_eval).mean_local_acc;
    }
    m.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.history.push_back(m);
    if (on_round != nullptr && *on_round) (*on_round)(state, m);
  }
  out.state = std::move(state);
  return out;
}

RunResult run_fdnas(std::shared_ptr<const Topology> topo, std::span<const ClientData> clients,
                    const FederationConfig& cfg, const StepObserver* observer) {
  auto state = init_server(std::move(topo), cfg.seed, clients.size(), cfg.local.sgd, cfg.local.adam);
  return run_rounds(std::move(state), clients, cfg, observer);
}

}  // namespace fdnas

// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/federation/retrain.hpp"

namespace fdnas {

RetrainResult retrain_fedavg(const NormalNet& net, std::span<const ClientData> clients, const FederationConfig& cfg) {
  NormalNet scratch = reinitialize(net, derive_seed(cfg.seed, {stream::kRetrain}));
  ServerState state;
  state.net = SuperNet{scratch.topology, scratch.weights};
  state.w_opts.assign(clients.size(), OptimizerState::make_sgd(cfg.local.sgd));
  state.a_opts.assign(clients.size(), OptimizerState::make_adam(cfg.local.adam));
  FederationConfig rc = cfg;
  rc.local.update_alpha = false;
  rc.local.latency = nullptr;
  rc.local.latency_weight = 0.0;
  auto run = run_rounds(std::move(state), clients, rc);
  scratch.weights = std::move(run.state.net.weights);
  return {std::move(scratch), std::move(run.history)};
}

}  // namespace fdnas

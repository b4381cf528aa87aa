// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "fdnas/federation/server.hpp"
#include "fdnas/supernet/normal_net.hpp"

namespace fdnas {

struct RetrainResult {
  NormalNet net;
  std::vector<RoundMetrics> history;
};

/// FedAvg from scratch: the architecture of `net` is kept, its weights are
/// re-initialized from cfg.seed, and only weights are trained and averaged.
RetrainResult retrain_fedavg(const NormalNet& net, std::span<const ClientData> clients, const FederationConfig& cfg);

}  // namespace fdnas

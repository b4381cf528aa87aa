// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fdnas/federation/client.hpp"
#include "fdnas/supernet/normal_net.hpp"

namespace fdnas {

struct EvalOptions {
  std::size_t finetune_epochs = 0;
  std::size_t batch_size = 32;
  double lr = 0.01;
  SgdConfig sgd;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct EvalResult {
  double fed_avg_acc = 0.0;     // global model on the pooled client test splits
  double mean_local_acc = 0.0;  // mean of per_client
  std::vector<double> per_client;
};

double accuracy(const NormalNet& net, const LabeledDataset& ds);

/// Plain SGD-momentum on a copy, starting from fresh optimizer state.
NormalNet finetune(const NormalNet& net, const LabeledDataset& train, const EvalOptions& opts, std::size_t client_id);

/// Each client fine-tunes a copy of `net` for `finetune_epochs` on its train
/// split, then scores its own test split.
EvalResult evaluate(const NormalNet& net, std::span<const ClientData> clients, const EvalOptions& opts);

}  // namespace fdnas

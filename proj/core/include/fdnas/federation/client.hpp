// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fdnas/data/dataset.hpp"
#include "fdnas/data/partition.hpp"
#include "fdnas/federation/aggregate.hpp"
#include "fdnas/nn/optim.hpp"
#include "fdnas/supernet/latency.hpp"
#include "fdnas/supernet/supernet.hpp"

namespace fdnas {

struct ClientData {
  std::size_t id = 0;
  LabeledDataset train;
  LabeledDataset val;
  LabeledDataset test;
  std::string tag;
  std::string hardware;

  /// Local dataset size used as the aggregation weight (train + val).
  std::size_t num_examples() const { return train.size() + val.size(); }
};

/// Materializes one ClientData per shard. `tags` and `hardware` may be empty
/// or hold one entry per client.
std::vector<ClientData> build_clients(const LabeledDataset& ds, const ShardPlan& plan,
                                      std::span<const std::string> tags = {},
                                      std::span<const std::string> hardware = {});

struct LocalTraining {
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  double w_lr0 = 0.05;        // cosine-decayed over the schedule
  std::size_t schedule_rounds = 0;  // 0: the run's round count
  double alpha_lr = 3e-3;     // constant
  SgdConfig sgd;
  double grad_clip = 5.0;     // global L2 norm bound on weight gradients; 0 disables
  AdamConfig adam;
  bool update_alpha = true;
  double latency_weight = 0.0;
  const LatencyTable* latency = nullptr;
  bool audit = false;         // compare parameters around every step
};

enum class BatchSplit : std::uint8_t { kTrain, kVal };

/// One optimizer step, as seen by the audit instrumentation.
struct StepRecord {
  std::size_t client = 0;
  std::size_t round = 0;
  std::size_t epoch = 0;
  BatchSplit split = BatchSplit::kTrain;
  bool weights_changed = false;
  bool arch_changed = false;
};

using StepObserver = std::function<void(const StepRecord&)>;

struct ClientStats {
  double train_loss = 0.0;  // mean over the last epoch's train pass
  double val_loss = 0.0;    // mean over the last epoch's val pass
  std::size_t weight_steps = 0;
  std::size_t arch_steps = 0;
  std::vector<double> batch_train_losses;  // in step order, all epochs
};

struct ClientResult {
  ModelUpdate update;
  ClientStats stats;
};

/// Local training from the downloaded globals. Every epoch runs a full
/// train-split pass updating weights (sampled gates, SGD-momentum) and then,
/// when the net has searchable layers, a full val-split pass updating the
/// logits (mixture gradient, Adam). Randomness derives from
/// (seed, client id, round) only.
ClientResult client_update(const SuperNet& global, const ArchParams& global_arch, const ClientData& client,
                           OptimizerState& w_opt, OptimizerState& a_opt, const LocalTraining& cfg, std::size_t round,
                           std::uint64_t seed, const StepObserver* observer = nullptr);

}  // namespace fdnas

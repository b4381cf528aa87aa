// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/federation/evaluate.hpp"

#include <algorithm>

#include "fdnas/error.hpp"
#include "fdnas/parallel.hpp"

namespace fdnas {
namespace {

constexpr std::size_t kEvalChunk = 256;

std::size_t correct_count(const NormalNet& net, const LabeledDataset& ds) {
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t b = 0; b < ds.size(); b += kEvalChunk) {
    const std::size_t e = std::min(ds.size(), b + kEvalChunk);
    idx.resize(e - b);
    for (std::size_t i = b; i < e; ++i) idx[i - b] = i;
    correct += count_correct(net.forward(ds.batch(idx)), ds.batch_labels(idx));
  }
  return correct;
}

}  // namespace

double accuracy(const NormalNet& net, const LabeledDataset& ds) {
  if (ds.empty()) throw ArgumentError("accuracy: empty dataset");
  return static_cast<double>(correct_count(net, ds)) / static_cast<double>(ds.size());
}

NormalNet finetune(const NormalNet& net, const LabeledDataset& train, const EvalOptions& opts, std::size_t client_id) {
  if (opts.finetune_epochs == 0) return net;
  ClientData c;
  c.id = client_id;
  c.train = train;
  LocalTraining cfg;
  cfg.epochs = opts.finetune_epochs;
  cfg.batch_size = opts.batch_size;
  cfg.w_lr0 = opts.lr;
  cfg.schedule_rounds = 1;
  cfg.sgd = opts.sgd;
  cfg.update_alpha = false;
  SuperNet wrapper{net.topology, net.weights};
  auto w_opt = OptimizerState::make_sgd(opts.sgd);
  auto a_opt = OptimizerState::make_adam({});
  auto res = client_update(wrapper, ArchParams{}, c, w_opt, a_opt, cfg, 0, derive_seed(opts.seed, {stream::kFinetune}));
  NormalNet out = net;
  out.weights = std::move(res.update.weights);
  return out;
}

EvalResult evaluate(const NormalNet& net, std::span<const ClientData> clients, const EvalOptions& opts) {
  if (clients.empty()) throw ArgumentError("evaluate: no clients");
  for (const auto& c : clients) {
    if (c.test.empty()) throw ArgumentError("evaluate: client " + std::to_string(c.id) + " has an empty test split");
  }
  EvalResult r;
  std::size_t correct = 0, total = 0;
  for (const auto& c : clients) {
    correct += correct_count(net, c.test);
    total += c.test.size();
  }
  r.fed_avg_acc = static_cast<double>(correct) / static_cast<double>(total);
  r.per_client.assign(clients.size(), 0.0);
  parallel_for(clients.size(), opts.threads, [&](std::size_t i) {
    const auto tuned = finetune(net, clients[i].train, opts, clients[i].id);
    r.per_client[i] = accuracy(tuned, clients[i].test);
  });
  double sum = 0.0;
  for (double a : r.per_client) sum += a;
  r.mean_local_acc = sum / static_cast<double>(clients.size());
  return r;
}

}  // namespace fdnas

// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/federation/client.hpp"

#include <algorithm>
#include <cmath>

#include "fdnas/error.hpp"

namespace fdnas {
namespace {

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

void check_loss(double loss, std::size_t client, const char* pass) {
  if (!std::isfinite(loss)) {
    throw NumericError("client " + std::to_string(client) + ": non-finite loss during " + pass + " pass");
  }
}

void clip_global_norm(GradSet& grads, double bound) {
  if (bound <= 0.0) return;
  double ss = 0.0;
  for (const auto& g : grads) {
    if (!g) continue;
    for (double v : g->values()) ss += v * v;
  }
  const double norm = std::sqrt(ss);
  if (norm <= bound) return;
  const double scale = bound / norm;
  for (auto& g : grads) {
    if (!g) continue;
    for (double& v : g->values()) v *= scale;
  }
}

}  // namespace

std::vector<ClientData> build_clients(const LabeledDataset& ds, const ShardPlan& plan, std::span<const std::string> tags,
                                      std::span<const std::string> hardware) {
  plan.validate();
  if (plan.dataset_size != ds.size()) throw ArgumentError("shard plan was built for a different dataset");
  const std::size_t k = plan.clients.size();
  if (!tags.empty() && tags.size() != k) throw ArgumentError("one tag per client required");
  if (!hardware.empty() && hardware.size() != k) throw ArgumentError("one hardware profile per client required");
  std::vector<ClientData> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    ClientData c;
    c.id = i;
    c.train = gather(ds, plan.clients[i].train);
    c.val = gather(ds, plan.clients[i].val);
    c.test = gather(ds, plan.clients[i].test);
    if (!tags.empty()) c.tag = tags[i];
    if (!hardware.empty()) c.hardware = hardware[i];
    out.push_back(std::move(c));
  }
  return out;
}

ClientResult client_update(const SuperNet& global, const ArchParams& global_arch, const ClientData& client,
                           OptimizerState& w_opt, OptimizerState& a_opt, const LocalTraining& cfg, std::size_t round,
                           std::uint64_t seed, const StepObserver* observer) {
  ClientResult res;
  res.update.weights = global.weights;
  res.update.arch = global_arch;
  if (cfg.epochs == 0) return res;

  const Topology& topo = global.topo();
  const bool search = cfg.update_alpha && topo.num_searchable() > 0;
  if (client.train.empty()) throw ArgumentError("client " + std::to_string(client.id) + ": empty train split");
  if (search && client.val.empty()) throw ArgumentError("client " + std::to_string(client.id) + ": empty val split");
  if (cfg.batch_size == 0) throw ArgumentError("batch size must be positive");
  if (search && cfg.latency_weight != 0.0 && cfg.latency == nullptr) {
    throw ArgumentError("client " + std::to_string(client.id) + ": latency weight set without a latency table");
  }

  SuperNet local{global.topology, global.weights};
  ArchParams& arch = res.update.arch;
  Rng rng(derive_seed(seed, {stream::kClient, client.id, round}));
  const double w_lr = cosine_lr(round, cfg.schedule_rounds, cfg.w_lr0);
  auto train_order = iota(client.train.size());
  auto val_order = iota(client.val.size());
  std::vector<std::size_t> path(topo.size(), 0);

  auto record = [&](std::size_t epoch, BatchSplit split, const ParamSet* w_before, const ArchParams* a_before) {
    if (observer == nullptr || !*observer) return;
    StepRecord r{client.id, round, epoch, split, false, false};
    if (w_before != nullptr) r.weights_changed = !(*w_before == local.weights);
    if (a_before != nullptr) r.arch_changed = !(*a_before == arch);
    (*observer)(r);
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(train_order);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < train_order.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(train_order.size(), b + cfg.batch_size);
      const std::span<const std::size_t> idx(train_order.data() + b, e - b);
      const Tensor x = client.train.batch(idx);
      const auto y = client.train.batch_labels(idx);
      if (search) {
        path = topo.path_from_choices(sample_gates(arch, rng).choices);
      } else if (topo.num_searchable() > 0) {
        path = topo.path_from_choices(argmax_choices(arch));
      }
      auto trace = forward_path(topo, local.weights, path, x);
      auto ce = cross_entropy(trace.output, y);
      check_loss(ce.loss, client.id, "train");
      auto grads = backward_path(topo, local.weights, trace, ce.grad);
      clip_global_norm(grads, cfg.grad_clip);
      std::optional<ParamSet> w_before;
      std::optional<ArchParams> a_before;
      if (cfg.audit) {
        w_before = local.weights;
        a_before = arch;
      }
      sgd_momentum_step(local.weights.tensors, grads, w_opt, w_lr);
      ++res.stats.weight_steps;
      if (cfg.audit) record(epoch, BatchSplit::kTrain, &*w_before, &*a_before);
      loss_sum += ce.loss * static_cast<double>(idx.size());
      res.stats.batch_train_losses.push_back(ce.loss);
    }
    res.stats.train_loss = loss_sum / static_cast<double>(train_order.size());

    if (!search) {
      if (epoch + 1 == cfg.epochs && !client.val.empty()) {
        const auto trace = forward_path(topo, local.weights, path, client.val.all_examples());
        res.stats.val_loss = cross_entropy(trace.output, client.val.labels).loss;
      }
      continue;
    }
    rng.shuffle(val_order);
    double val_sum = 0.0;
    for (std::size_t b = 0; b < val_order.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(val_order.size(), b + cfg.batch_size);
      const std::span<const std::size_t> idx(val_order.data() + b, e - b);
      const Tensor x = client.val.batch(idx);
      const auto y = client.val.batch_labels(idx);
      auto g = alpha_gradient(local, arch, x, y, cfg.latency, cfg.latency_weight);
      check_loss(g.loss, client.id, "val");
      GradSet grads(g.grad.size());
      for (std::size_t l = 0; l < g.grad.size(); ++l) grads[l] = std::move(g.grad[l]);
      std::optional<ParamSet> w_before;
      std::optional<ArchParams> a_before;
      if (cfg.audit) {
        w_before = local.weights;
        a_before = arch;
      }
      adam_step(arch.logits, grads, a_opt, cfg.alpha_lr);
      ++res.stats.arch_steps;
      if (cfg.audit) record(epoch, BatchSplit::kVal, &*w_before, &*a_before);
      val_sum += g.cross_entropy * static_cast<double>(idx.size());
    }
    res.stats.val_loss = val_sum / static_cast<double>(val_order.size());
  }
  res.update.weights = std::move(local.weights);
  return res;
}

}  // namespace fdnas

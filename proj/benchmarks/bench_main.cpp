// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "fdnas/federation/aggregate.hpp"
#include "fdnas/harness/config.hpp"
#include "fdnas/nn/loss.hpp"
#include "fdnas/nn/ops.hpp"
#include "fdnas/supernet/supernet.hpp"

namespace fdnas {
namespace {

Tensor random_tensor(const Shape& shape, Rng& rng) {
  Tensor t(shape);
  for (double& v : t.values()) v = rng.normal();
  return t;
}

// Range: kernel size.
void BM_DwsepForwardBackward(benchmark::State& state) {
  const DepthwiseSepConv op{static_cast<std::size_t>(state.range(0)), 4, 3};
  const Shape ex{4, 8, 8};
  Rng rng(1);
  std::vector<Tensor> params;
  for (const Shape& s : op_param_shapes(op, ex)) params.push_back(random_tensor(s, rng));
  const Tensor x = random_tensor(with_batch(32, ex), rng);
  const Tensor g = random_tensor(with_batch(32, ex), rng);
  for (auto _ : state) {
    const OpForward f = op_forward(op, params, x);
    benchmark::DoNotOptimize(op_backward(op, params, f.cache, g));
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_DwsepForwardBackward)->Arg(3)->Arg(5);

void BM_AlphaGradient(benchmark::State& state) {
  const auto topo = build_search_space(SearchSpaceConfig{});
  const SuperNet net = SuperNet::create(topo, 1);
  Rng rng(2);
  const Tensor x = random_tensor(with_batch(32, topo->input_shape()), rng);
  std::vector<Label> y(32);
  for (Label& v : y) v = static_cast<Label>(rng.below(6));
  const ArchParams arch = uniform_arch(*topo);
  for (auto _ : state) benchmark::DoNotOptimize(alpha_gradient(net, arch, x, y, nullptr, 0.0));
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_AlphaGradient);

void BM_SampledPathStep(benchmark::State& state) {
  const auto topo = build_search_space(SearchSpaceConfig{});
  const SuperNet net = SuperNet::create(topo, 1);
  Rng rng(3);
  const Tensor x = random_tensor(with_batch(32, topo->input_shape()), rng);
  std::vector<Label> y(32);
  for (Label& v : y) v = static_cast<Label>(rng.below(6));
  const ArchParams arch = uniform_arch(*topo);
  for (auto _ : state) {
    const PathTrace t = forward_sampled(net, sample_gates(arch, rng), x);
    const LossResult l = cross_entropy(t.output, y);
    benchmark::DoNotOptimize(backward_path(*topo, net.weights, t, l.grad));
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_SampledPathStep);

void BM_ClientRound(benchmark::State& state) {
  ExperimentConfig cfg;
  cfg.search.local_epochs = 1;
  const Experiment x = prepare_experiment(cfg);
  FederationConfig f = search_federation(cfg);
  f.local.schedule_rounds = f.rounds;
  const ServerState s = init_server(x.topology, 1, 1, f.local.sgd, f.local.adam);
  for (auto _ : state) {
    OptimizerState w = s.w_opts[0], a = s.a_opts[0];
    benchmark::DoNotOptimize(client_update(s.net, s.arch, x.clients[0], w, a, f.local, 0, 1));
  }
}
BENCHMARK(BM_ClientRound)->Unit(benchmark::kMillisecond);

// Range: number of clients.
void BM_Aggregate(benchmark::State& state) {
  const auto topo = build_search_space(SearchSpaceConfig{});
  std::vector<ModelUpdate> ups;
  std::vector<double> sizes;
  for (int k = 0; k < state.range(0); ++k) {
    ups.push_back({init_params(*topo, static_cast<std::uint64_t>(k)), uniform_arch(*topo)});
    sizes.push_back(100.0 + k);
  }
  for (auto _ : state) benchmark::DoNotOptimize(aggregate(ups, sizes));
}
BENCHMARK(BM_Aggregate)->Arg(6)->Arg(10);

}  // namespace
}  // namespace fdnas

BENCHMARK_MAIN();

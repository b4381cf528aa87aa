// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "fdnas/error.hpp"
#include "fdnas/federation/aggregate.hpp"
#include "fdnas/federation/checkpoint.hpp"
#include "fdnas/federation/evaluate.hpp"
#include "fdnas/federation/metrics.hpp"
#include "fdnas/federation/retrain.hpp"
#include "fdnas/harness/config.hpp"
#include "fdnas/supernet/normal_net.hpp"

namespace fdnas {
namespace {

ExperimentConfig small_config(std::uint64_t seed = 1) {
  ExperimentConfig c;
  c.seed = seed;
  c.data.synthetic.per_class = 30;
  c.space.num_layers = 3;
  c.search.rounds = 4;
  c.search.local_epochs = 1;
  return c;
}

TEST(Aggregate, WeightedAverageHandValues) {
  const std::vector<Tensor> a{Tensor({2}, {1.0, 2.0})}, b{Tensor({2}, {3.0, 6.0})};
  const std::vector<const std::vector<Tensor>*> lists{&a, &b};
  const std::vector<double> sizes{1.0, 3.0};
  const auto avg = weighted_average(lists, sizes);
  EXPECT_DOUBLE_EQ(avg[0][0], 2.5);
  EXPECT_DOUBLE_EQ(avg[0][1], 5.0);
  const auto strict = weighted_average(lists, sizes, 8.0);
  EXPECT_DOUBLE_EQ(strict[0][0], 1.25);
  EXPECT_DOUBLE_EQ(strict[0][1], 2.5);
}

TEST(Aggregate, RejectsMismatchedInputs) {
  const std::vector<Tensor> a{Tensor({2})}, b{Tensor({3})};
  const std::vector<const std::vector<Tensor>*> lists{&a, &b};
  EXPECT_THROW(weighted_average(lists, std::vector<double>{1.0, 1.0}), ArgumentError);
  const std::vector<const std::vector<Tensor>*> one{&a};
  EXPECT_THROW(weighted_average(one, std::vector<double>{1.0, 1.0}), ArgumentError);
  EXPECT_THROW(weighted_average(one, std::vector<double>{0.0}), ArgumentError);
}

TEST(Client, UpdateIsPureAndDeterministic) {
  const auto cfg = small_config();
  const auto x = prepare_experiment(cfg);
  const FederationConfig f = search_federation(cfg);
  ServerState s = init_server(x.topology, cfg.seed, x.clients.size(), f.local.sgd, f.local.adam);
  const auto before = s;
  LocalTraining local = f.local;
  local.schedule_rounds = f.rounds;
  OptimizerState w1 = s.w_opts[0], a1 = s.a_opts[0], w2 = s.w_opts[0], a2 = s.a_opts[0];
  const auto r1 = client_update(s.net, s.arch, x.clients[0], w1, a1, local, 0, cfg.seed);
  const auto r2 = client_update(s.net, s.arch, x.clients[0], w2, a2, local, 0, cfg.seed);
  EXPECT_EQ(r1.update.weights, r2.update.weights);
  EXPECT_EQ(r1.update.arch, r2.update.arch);
  EXPECT_EQ(w1, w2);
  EXPECT_TRUE(s == before);
  EXPECT_NE(r1.update.weights, s.net.weights);
  EXPECT_NE(r1.update.arch, s.arch);
  const auto r3 = client_update(s.net, s.arch, x.clients[0], w2, a2, local, 1, cfg.seed);
  EXPECT_NE(r3.update.weights, r1.update.weights);
}

TEST(Client, AuditSeparatesTrainAndValidationSteps) {
  const auto cfg = small_config();
  const auto x = prepare_experiment(cfg);
  FederationConfig f = search_federation(cfg);
  f.local.audit = true;
  f.local.epochs = 2;
  f.local.schedule_rounds = f.rounds;
  ServerState s = init_server(x.topology, cfg.seed, 1, f.local.sgd, f.local.adam);
  std::size_t train = 0, val = 0, bad = 0;
  const StepObserver obs = [&](const StepRecord& r) {
    if (r.split == BatchSplit::kTrain) {
      ++train;
      bad += r.arch_changed || !r.weights_changed;
    } else {
      ++val;
      bad += r.weights_changed || !r.arch_changed;
    }
  };
  const auto res = client_update(s.net, s.arch, x.clients[0], s.w_opts[0], s.a_opts[0], f.local, 0, 1, &obs);
  EXPECT_EQ(bad, 0u);
  EXPECT_EQ(train, res.stats.weight_steps);
  EXPECT_EQ(val, res.stats.arch_steps);
  const std::size_t per_epoch = (x.clients[0].train.size() + f.local.batch_size - 1) / f.local.batch_size;
  EXPECT_EQ(train, 2 * per_epoch);
}

TEST(Client, FrozenArchitectureIsUntouched) {
  const auto cfg = small_config();
  const auto x = prepare_experiment(cfg);
  FederationConfig f = search_federation(cfg);
  f.local.update_alpha = false;
  f.local.schedule_rounds = f.rounds;
  ServerState s = init_server(x.topology, cfg.seed, 1, f.local.sgd, f.local.adam);
  const auto r = client_update(s.net, s.arch, x.clients[0], s.w_opts[0], s.a_opts[0], f.local, 0, 1);
  EXPECT_EQ(r.update.arch, s.arch);
  EXPECT_EQ(r.stats.arch_steps, 0u);
}

TEST(Client, DivergenceRaisesNumericError) {
  const auto cfg = small_config();
  const auto x = prepare_experiment(cfg);
  FederationConfig f = search_federation(cfg);
  f.local.w_lr0 = 1e150;
  f.local.grad_clip = 0.0;
  f.local.schedule_rounds = f.rounds;
  ServerState s = init_server(x.topology, cfg.seed, 1, f.local.sgd, f.local.adam);
  EXPECT_THROW(client_update(s.net, s.arch, x.clients[0], s.w_opts[0], s.a_opts[0], f.local, 0, 1), NumericError);
}

TEST(Server, ParticipantSelection) {
  EXPECT_EQ(select_participants(6, 1.0, 3, 0), (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  const auto half = select_participants(6, 0.5, 3, 2);
  EXPECT_EQ(half.size(), 3u);
  EXPECT_TRUE(std::is_sorted(half.begin(), half.end()));
  EXPECT_EQ(half, select_participants(6, 0.5, 3, 2));
  EXPECT_EQ(select_participants(6, 0.01, 3, 0).size(), 1u);
}

TEST(Server, ResumeFromCheckpointMatchesUninterruptedRun) {
  const auto cfg = small_config();
  const auto x = prepare_experiment(cfg);
  const FederationConfig f = search_federation(cfg);
  const RunResult full = run_fdnas(x.topology, x.clients, f);
  FederationConfig half = f;
  half.rounds = 2;
  // Keep the cosine horizon of the full run.
  half.local.schedule_rounds = f.rounds;
  const RunResult part = run_fdnas(x.topology, x.clients, half);
  const Checkpoint ck{config_hash(cfg), cfg.seed, part.state};
  const Checkpoint back = decode_checkpoint(encode_checkpoint(ck));
  const RunResult rest = run_rounds(back.state, x.clients, f);
  EXPECT_TRUE(rest.state == full.state);
  ASSERT_EQ(rest.history.size(), 2u);
  EXPECT_EQ(rest.history[1].val_loss, full.history[3].val_loss);
}

TEST(Server, ThreadedRunsMatchSequential) {
  auto cfg = small_config(3);
  const auto x = prepare_experiment(cfg);
  FederationConfig f = search_federation(cfg);
  const RunResult seq = run_fdnas(x.topology, x.clients, f);
  f.threads = 3;
  const RunResult par = run_fdnas(x.topology, x.clients, f);
  EXPECT_TRUE(seq.state == par.state);
  EXPECT_TRUE(same_trajectory(seq.history, par.history));
}

TEST(Checkpoint, RoundTripDigestAndCorruption) {
  const auto cfg = small_config();
  const auto x = prepare_experiment(cfg);
  FederationConfig f = search_federation(cfg);
  f.rounds = 1;
  const RunResult r = run_fdnas(x.topology, x.clients, f);
  const Checkpoint ck{config_hash(cfg), 1, r.state};
  const auto bytes = encode_checkpoint(ck);
  EXPECT_EQ(encode_checkpoint(decode_checkpoint(bytes)), bytes);
  EXPECT_EQ(checkpoint_digest(ck), checkpoint_digest(decode_checkpoint(bytes)));
  auto bad = bytes;
  bad[1] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), FormatError);
  EXPECT_THROW(decode_checkpoint(std::span(bytes).first(100)), FormatError);
}

TEST(Metrics, CsvLayoutIsFrozen) {
  std::vector<RoundMetrics> rows(2);
  rows[0] = {1, 1.5, 1.25, std::nullopt, std::nullopt, 3.0, 0.1};
  rows[1] = {2, 1.0, 0.75, 0.5, 0.625, 2.5, 0.2};
  const std::string csv = format_metrics_csv(rows, 0x10, 7);
  const std::string head =
      "# fdnas-metrics v1 config=0000000000000010 seed=7\n"
      "round,train_loss,val_loss,fed_avg_acc,mean_local_acc,expected_latency_ms,wall_clock_s\n";
  EXPECT_EQ(csv.substr(0, head.size()), head);
  EXPECT_NE(csv.find("\n1,1.5,1.25,,,3,"), std::string::npos);
  EXPECT_NE(csv.find("\n2,1,0.75,0.5,0.625,2.5,"), std::string::npos);
  auto other = rows;
  other[1].wall_clock_s = 9.0;
  EXPECT_TRUE(same_trajectory(rows, other));
  other[1].val_loss = 0.7;
  EXPECT_FALSE(same_trajectory(rows, other));
}

TEST(Evaluate, PerfectToyClassifierScoresOne) {
  const auto topo = std::make_shared<const Topology>(Shape{2}, std::vector<LayerDef>{LayerDef::fixed(Dense{2})});
  NormalNet net{topo, ParamSet{{Tensor({2, 2}, {1.0, 0.0, 0.0, 1.0}), Tensor({2})}}, {}};
  LabeledDataset ds{{2}, 2, {1.0, 0.0, 0.0, 1.0, 2.0, -1.0}, {0, 1, 0}};
  EXPECT_DOUBLE_EQ(accuracy(net, ds), 1.0);
  std::vector<ClientData> clients(2);
  for (std::size_t i = 0; i < 2; ++i) {
    clients[i].id = i;
    clients[i].train = ds;
    clients[i].test = ds;
  }
  const EvalResult r = evaluate(net, clients, EvalOptions{});
  EXPECT_DOUBLE_EQ(r.fed_avg_acc, 1.0);
  EXPECT_DOUBLE_EQ(r.mean_local_acc, 1.0);
  EXPECT_EQ(r.per_client, (std::vector<double>{1.0, 1.0}));
}

TEST(Retrain, ZeroRoundsGivesUntrainedBaseline) {
  const auto cfg = small_config();
  const auto x = prepare_experiment(cfg);
  const NormalNet d = derive_from_choices(SuperNet::create(x.topology, 1), std::vector<std::size_t>(3, 3));
  double acc = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    FederationConfig f = retrain_federation(cfg);
    f.rounds = 0;
    f.seed = seed;
    const RetrainResult r = retrain_fedavg(d, x.clients, f);
    EXPECT_TRUE(r.history.empty());
    EvalOptions e;
    e.finetune_epochs = 0;
    acc += evaluate(r.net, x.clients, e).fed_avg_acc / 5.0;
  }
  // chance is 1/6
  EXPECT_LT(acc, 0.4);
}

TEST(Retrain, TrainsOnlyWeightsAndKeepsArchitecture) {
  const auto cfg = small_config();
  const auto x = prepare_experiment(cfg);
  const NormalNet d = derive_from_choices(SuperNet::create(x.topology, 1), std::vector<std::size_t>{2, 3, 4});
  FederationConfig f = retrain_federation(cfg);
  f.rounds = 5;
  const RetrainResult r = retrain_fedavg(d, x.clients, f);
  EXPECT_EQ(r.net.choices, d.choices);
  EXPECT_EQ(r.history.size(), 5u);
  EXPECT_LT(r.history.back().train_loss, r.history.front().train_loss);
}

}  // namespace
}  // namespace fdnas

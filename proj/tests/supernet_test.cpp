// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "fdnas/error.hpp"
#include "fdnas/nn/loss.hpp"
#include "fdnas/nn/ops.hpp"
#include "fdnas/supernet/arch.hpp"
#include "fdnas/supernet/latency.hpp"
#include "fdnas/supernet/normal_net.hpp"
#include "fdnas/supernet/serialize.hpp"
#include "fdnas/supernet/supernet.hpp"
#include "selftest/gradcheck.hpp"

namespace fdnas {
namespace {

Tensor random_tensor(const Shape& shape, Rng& rng) {
  Tensor t(shape);
  for (double& v : t.values()) v = rng.normal();
  return t;
}

std::shared_ptr<const Topology> desk_space() { return build_search_space(SearchSpaceConfig{}); }

ArchParams one_hot_arch(const Topology& topo, std::span<const std::size_t> choices) {
  ArchParams a = uniform_arch(topo);
  for (std::size_t l = 0; l < a.logits.size(); ++l) {
    a.logits[l].fill(-1000.0);
    a.logits[l][choices[l]] = 0.0;
  }
  return a;
}

TEST(Topology, DeskSpaceLayout) {
  const auto topo = desk_space();
  // stem, six searchable layers, one pool, classifier
  EXPECT_EQ(topo->size(), 9u);
  EXPECT_EQ(topo->num_searchable(), 6u);
  EXPECT_EQ(topo->output_shape(), (Shape{6}));
  for (std::size_t n : topo->candidate_counts()) EXPECT_EQ(n, 5u);
  EXPECT_EQ(topo->path_from_choices(std::vector<std::size_t>(6, 2)).size(), 9u);
}

TEST(SuperNet, CreationIsSeedDeterministic) {
  const auto topo = desk_space();
  EXPECT_EQ(SuperNet::create(topo, 3).weights, SuperNet::create(topo, 3).weights);
  EXPECT_NE(SuperNet::create(topo, 3).weights, SuperNet::create(topo, 4).weights);
}

TEST(Arch, SoftmaxAndArgmaxTieBreak) {
  const std::vector<double> l{0.0, std::log(2.0), std::log(2.0)};
  const auto p = softmax_probs(l);
  EXPECT_NEAR(p[0], 0.2, 1e-15);
  EXPECT_NEAR(p[1], 0.4, 1e-15);
  const ArchParams a{{Tensor({3}, l), Tensor({2}, {5.0, 5.0})}};
  EXPECT_EQ(argmax_choices(a), (std::vector<std::size_t>{1, 0}));
}

TEST(Mixture, OneHotMixtureEqualsSinglePath) {
  const auto topo = desk_space();
  const SuperNet net = SuperNet::create(topo, 5);
  Rng rng(1);
  const Tensor x = random_tensor(with_batch(4, topo->input_shape()), rng);
  const std::vector<std::size_t> choices{0, 1, 2, 3, 4, 3};
  const MixtureTrace m = forward_mixture(net, one_hot_arch(*topo, choices), x);
  const PathTrace p = forward_path(*topo, net.weights, topo->path_from_choices(choices), x);
  ASSERT_EQ(m.output.shape(), p.output.shape());
  for (std::size_t i = 0; i < p.output.size(); ++i) EXPECT_NEAR(m.output[i], p.output[i], 1e-12);
}

TEST(Mixture, MatchesBruteForceWeightedSum) {
  SearchSpaceConfig cfg;
  cfg.num_layers = 1;
  cfg.downsample_after = {};
  const auto topo = build_search_space(cfg);
  const SuperNet net = SuperNet::create(topo, 8);
  Rng rng(2);
  const Tensor x = random_tensor(with_batch(3, topo->input_shape()), rng);
  ArchParams arch = uniform_arch(*topo);
  for (double& v : arch.logits[0].values()) v = rng.normal();
  const auto probs = softmax_probs(arch.logits[0].values());

  const Tensor stem = op_forward(topo->layer(0).def.candidates[0], net.candidate_params(0, 0), x).output;
  Tensor mixed(stem.shape());
  for (std::size_t n = 0; n < probs.size(); ++n) {
    const Tensor o = op_forward(topo->layer(1).def.candidates[n], net.candidate_params(1, n), stem).output;
    for (std::size_t i = 0; i < o.size(); ++i) mixed[i] += probs[n] * o[i];
  }
  const Tensor want = op_forward(topo->layer(2).def.candidates[0], net.candidate_params(2, 0), mixed).output;
  const MixtureTrace got = forward_mixture(net, arch, x);
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got.output[i], want[i], 1e-12);
}

TEST(Mixture, AlphaGradientMatchesCentralDifferences) {
  Rng rng(3);
  for (int rep = 0; rep < 4; ++rep) {
    for (bool lat : {false, true}) {
      const auto gc = selftest::check_mixture(rng, lat);
      EXPECT_LE(selftest::relative_error(gc.analytic, gc.numeric), 1e-6);
    }
  }
}

TEST(Mixture, PathWeightGradientsMatchCentralDifferences) {
  Rng rng(4);
  for (int rep = 0; rep < 4; ++rep) {
    const auto gc = selftest::check_path(rng);
    EXPECT_LE(selftest::relative_error(gc.analytic, gc.numeric), 1e-6);
  }
}

TEST(Mixture, LatencyTermNeedsATable) {
  const auto topo = desk_space();
  const SuperNet net = SuperNet::create(topo, 1);
  const Tensor x(with_batch(2, topo->input_shape()), 0.5);
  const std::vector<Label> y{0, 1};
  EXPECT_THROW(alpha_gradient(net, uniform_arch(*topo), x, y, nullptr, 0.1), ArgumentError);
  EXPECT_NO_THROW(alpha_gradient(net, uniform_arch(*topo), x, y, nullptr, 0.0));
}

TEST(Mixture, ArchitectureMismatchIsRejected) {
  const auto topo = desk_space();
  ArchParams bad = uniform_arch(*topo);
  bad.logits.pop_back();
  EXPECT_THROW(require_compatible(*topo, bad), ArgumentError);
}

TEST(Latency, ExpectedLatencyHandValues) {
  const LatencyTable table("t", {{3.0, 6.0}});
  const ArchParams arch{{Tensor({2}, {0.0, std::log(2.0)})}};
  const ExpectedLatency e = expected_latency(arch, table);
  EXPECT_NEAR(e.ms, 5.0, 1e-14);
  // d/d alpha_i of sum p_j t_j = p_i (t_i - E)
  EXPECT_NEAR(e.grad[0][0], -2.0 / 3.0, 1e-14);
  EXPECT_NEAR(e.grad[0][1], 2.0 / 3.0, 1e-14);
  EXPECT_DOUBLE_EQ(choice_latency(table, std::vector<std::size_t>{1}), 6.0);
}

TEST(Latency, GradientMatchesCentralDifferences) {
  Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const auto gc = selftest::check_expected_latency(rng);
    EXPECT_LE(selftest::relative_error(gc.analytic, gc.numeric), 1e-6);
  }
}

TEST(Latency, TableParsing) {
  const std::vector<std::size_t> counts{2, 2};
  const std::string good =
      "profile,layer,candidate,latency_ms\n# comment\ngpu,0,0,1\ngpu,0,1,2\ngpu,1,0,3\ngpu,1,1,4.5\n";
  const auto tables = parse_latency_tables(good, counts);
  ASSERT_EQ(tables.count("gpu"), 1u);
  EXPECT_DOUBLE_EQ(tables.at("gpu").at(1, 1), 4.5);
  EXPECT_THROW(parse_latency_tables("gpu,0,0,1\n", counts), FormatError);
  EXPECT_THROW(parse_latency_tables(good + "gpu,0,0,1\n", counts), FormatError);
  EXPECT_THROW(parse_latency_tables("profile,layer,candidate,latency_ms\ngpu,0,0,1\n", counts), FormatError);
  EXPECT_THROW(parse_latency_tables(good + "gpu,2,0,1\n", counts), FormatError);
  EXPECT_THROW(parse_latency_tables("profile,layer,candidate,latency_ms\ngpu,0,0,-1\n", counts), FormatError);
}

TEST(NormalNet, DerivationFollowsArgmaxAndMatchesPath) {
  const auto topo = desk_space();
  const SuperNet net = SuperNet::create(topo, 6);
  const std::vector<std::size_t> choices{2, 3, 4, 1, 2, 3};
  const NormalNet derived = derive_normal_net(net, one_hot_arch(*topo, choices));
  EXPECT_EQ(derived.choices, choices);
  Rng rng(6);
  const Tensor x = random_tensor(with_batch(3, topo->input_shape()), rng);
  const PathTrace p = forward_path(*topo, net.weights, topo->path_from_choices(choices), x);
  EXPECT_EQ(derived.forward(x), p.output);
}

TEST(NormalNet, ZeroLayersAreDroppedAndTiesTakeLowestIndex) {
  const auto topo = desk_space();
  const SuperNet net = SuperNet::create(topo, 7);
  ArchParams arch = uniform_arch(*topo);
  for (Tensor& t : arch.logits) t = Tensor({5}, {0.0, 1.0, 1.0, 0.0, 0.0});
  arch.logits[0] = Tensor({5}, {2.0, 1.0, 1.0, 0.0, 0.0});
  const NormalNet d = derive_normal_net(net, arch);
  EXPECT_EQ(d.choices, (std::vector<std::size_t>{0, 1, 1, 1, 1, 1}));
  // stem, five identities, pool, classifier
  EXPECT_EQ(d.layer_names().size(), 8u);
  EXPECT_EQ(d.layer_names().front(), "conv3x3");
}

TEST(NormalNet, FlopsHandCountOnTwoLayerNet) {
  const auto topo = std::make_shared<const Topology>(
      Shape{1, 4, 4}, std::vector<LayerDef>{LayerDef::fixed(Conv{3, 2, true}), LayerDef::fixed(Dense{3})});
  // conv: 9 taps * 1 in * 2 out * 16 positions; 18 weights + 2 biases
  // dense: 32 inputs * 3 outputs; 96 weights + 3 biases
  const FlopsParams fp = count_flops_params(*topo, std::vector<std::size_t>{0, 0});
  EXPECT_EQ(fp.macs, 288u + 96u);
  EXPECT_EQ(fp.params, 20u + 99u);
  EXPECT_EQ(max_path_flops(*topo), fp.macs);
}

TEST(NormalNet, DerivedFlopsBoundedBySuperNetMaximum) {
  const auto topo = desk_space();
  const SuperNet net = SuperNet::create(topo, 8);
  Rng rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    ArchParams arch = uniform_arch(*topo);
    for (Tensor& t : arch.logits) {
      for (double& v : t.values()) v = rng.normal();
    }
    const NormalNet d = derive_normal_net(net, arch);
    const FlopsParams fd = count_flops_params(d);
    EXPECT_LE(fd.macs, max_path_flops(*topo));
    EXPECT_EQ(fd, count_flops_params(net, GateSample{d.choices}));
  }
}

TEST(NormalNet, ReinitializeKeepsArchitecture) {
  const auto topo = desk_space();
  const NormalNet d = derive_from_choices(SuperNet::create(topo, 1), std::vector<std::size_t>(6, 3));
  const NormalNet r = reinitialize(d, 99);
  EXPECT_EQ(r.choices, d.choices);
  EXPECT_EQ(r.layer_names(), d.layer_names());
  EXPECT_NE(r.weights, d.weights);
}

TEST(Serialize, NetFileRoundTripIsByteIdentical) {
  const auto topo = desk_space();
  const NetFile f{0xabcdefu, 17, derive_from_choices(SuperNet::create(topo, 2), std::vector<std::size_t>{0, 1, 2, 3, 4, 2})};
  const auto bytes = encode_net_file(f);
  const NetFile g = decode_net_file(bytes);
  EXPECT_EQ(g.config_hash, f.config_hash);
  EXPECT_EQ(g.seed, f.seed);
  EXPECT_EQ(g.net.weights, f.net.weights);
  EXPECT_EQ(encode_net_file(g), bytes);
}

TEST(Serialize, CorruptNetFilesAreFormatErrors) {
  const auto topo = desk_space();
  const auto bytes = encode_net_file({1, 2, derive_from_choices(SuperNet::create(topo, 2), std::vector<std::size_t>(6, 2))});
  auto bad_magic = bytes;
  bad_magic[0] ^= 0xff;
  EXPECT_THROW(decode_net_file(bad_magic), FormatError);
  EXPECT_THROW(decode_net_file(std::span(bytes).first(bytes.size() / 2)), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_net_file(trailing), FormatError);
}

}  // namespace
}  // namespace fdnas

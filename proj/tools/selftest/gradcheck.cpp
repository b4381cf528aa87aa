// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "selftest/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <utility>

#include "fdnas/nn/loss.hpp"
#include "fdnas/nn/ops.hpp"
#include "fdnas/supernet/arch.hpp"
#include "fdnas/supernet/latency.hpp"
#include "fdnas/supernet/supernet.hpp"
#include "fdnas/supernet/topology.hpp"

namespace fdnas::selftest {
namespace {

constexpr std::size_t kCoordsPerTensor = 24;
using Pattern = std::vector<std::uint8_t>;

Tensor random_tensor(const Shape& shape, Rng& rng, double scale) {
  Tensor t(shape);
  for (double& v : t.values()) v = scale * rng.normal();
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  return std::inner_product(a.data(), a.data() + a.size(), b.data(), 0.0);
}

std::vector<std::size_t> pick_coords(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (n <= kCoordsPerTensor) return idx;
  rng.shuffle(idx);
  idx.resize(kCoordsPerTensor);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Pattern concat_patterns(std::span<const OpCache> caches) {
  Pattern out;
  for (const OpCache& c : caches) {
    const Pattern p = c.activation_pattern();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

/// Central difference of `eval` at each probed coordinate of `t`.
void probe(GradCase& gc, Tensor& t, const Tensor& grad, const Pattern& base, double step, Rng& rng,
           const std::function<std::pair<double, Pattern>()>& eval) {
  for (std::size_t i : pick_coords(t.size(), rng)) {
    const double keep = t[i];
    t[i] = keep + step;
    const auto [fp, pp] = eval();
    t[i] = keep - step;
    const auto [fm, pm] = eval();
    t[i] = keep;
    if (pp != base || pm != base) {
      ++gc.skipped;
      continue;
    }
    gc.analytic.push_back(grad[i]);
    gc.numeric.push_back((fp - fm) / (2.0 * step));
  }
}

std::shared_ptr<const Topology> small_space() {
  SearchSpaceConfig cfg;
  cfg.input_shape = {1, 6, 6};
  cfg.num_classes = 4;
  cfg.channels = 3;
  cfg.num_layers = 3;
  cfg.downsample_after = {0};
  return build_search_space(cfg);
}

std::vector<Label> random_labels(std::size_t n, std::size_t classes, Rng& rng) {
  std::vector<Label> y(n);
  for (Label& v : y) v = static_cast<Label>(rng.below(classes));
  return y;
}

LatencyTable random_table(std::span<const std::size_t> counts, Rng& rng) {
  std::vector<std::vector<double>> ms;
  for (std::size_t n : counts) {
    std::vector<double> row(n);
    for (double& v : row) v = 5.0 * rng.uniform();
    ms.push_back(std::move(row));
  }
  return LatencyTable("probe", std::move(ms));
}

ArchParams random_arch(std::span<const std::size_t> counts, Rng& rng, double scale) {
  ArchParams a;
  for (std::size_t n : counts) a.logits.push_back(random_tensor({n}, rng, scale));
  return a;
}

}  // namespace

double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-6});
}

GradCase check_op(const OpKind& op, const Shape& example, Rng& rng, double step) {
  GradCase gc;
  gc.family = op_name(op);
  std::vector<Tensor> params;
  for (const Shape& s : op_param_shapes(op, example)) params.push_back(random_tensor(s, rng, 0.5));
  Tensor x = random_tensor(with_batch(2, example), rng, 1.0);
  const OpForward base = op_forward(op, params, x);
  const Tensor r = random_tensor(base.output.shape(), rng, 1.0);
  const OpBackward bw = op_backward(op, params, base.cache, r);
  const Pattern pattern = base.cache.activation_pattern();
  const auto eval = [&] {
    const OpForward f = op_forward(op, params, x);
    return std::pair{dot(f.output, r), f.cache.activation_pattern()};
  };
  for (std::size_t p = 0; p < params.size(); ++p) probe(gc, params[p], bw.grad_params[p], pattern, step, rng, eval);
  probe(gc, x, bw.grad_input, pattern, step, rng, eval);
  return gc;
}

GradCase check_cross_entropy(std::size_t batch, std::size_t classes, Rng& rng, double step) {
  GradCase gc;
  gc.family = "cross_entropy";
  Tensor logits = random_tensor({batch, classes}, rng, 3.0);
  const auto labels = random_labels(batch, classes, rng);
  const LossResult base = cross_entropy(logits, labels);
  const auto eval = [&] { return std::pair{cross_entropy(logits, labels).loss, Pattern{}}; };
  probe(gc, logits, base.grad, {}, step, rng, eval);
  return gc;
}

GradCase check_path(Rng& rng, double step) {
  GradCase gc;
  gc.family = "path_weights";
  const auto topo = small_space();
  SuperNet net = SuperNet::create(topo, rng.next());
  std::vector<std::size_t> choices;
  for (std::size_t n : topo->candidate_counts()) choices.push_back(rng.below(n));
  const auto path = topo->path_from_choices(choices);
  const Tensor x = random_tensor(with_batch(3, topo->input_shape()), rng, 1.0);
  const auto labels = random_labels(3, topo->output_shape()[0], rng);
  const PathTrace trace = forward_path(*topo, net.weights, path, x);
  const LossResult loss = cross_entropy(trace.output, labels);
  const GradSet grads = backward_path(*topo, net.weights, trace, loss.grad);
  const Pattern pattern = concat_patterns(trace.caches);
  const auto eval = [&] {
    const PathTrace t = forward_path(*topo, net.weights, path, x);
    return std::pair{cross_entropy(t.output, labels).loss, concat_patterns(t.caches)};
  };
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i]) probe(gc, net.weights.tensors[i], *grads[i], pattern, step, rng, eval);
  }
  return gc;
}

GradCase check_mixture(Rng& rng, bool with_latency, double step) {
  GradCase gc;
  gc.family = with_latency ? "mixture_alpha_latency" : "mixture_alpha";
  const auto topo = small_space();
  const SuperNet net = SuperNet::create(topo, rng.next());
  const auto counts = topo->candidate_counts();
  ArchParams arch = random_arch(counts, rng, 1.0);
  const LatencyTable table = random_table(counts, rng);
  const double lambda = with_latency ? 0.05 + 0.2 * rng.uniform() : 0.0;
  const Tensor x = random_tensor(with_batch(3, topo->input_shape()), rng, 1.0);
  const auto labels = random_labels(3, topo->output_shape()[0], rng);
  const ArchGradient ag = alpha_gradient(net, arch, x, labels, &table, lambda);
  const auto pattern_of = [](const MixtureTrace& t) {
    Pattern out;
    for (const MixtureLayerTrace& l : t.layers) {
      const Pattern p = concat_patterns(l.caches);
      out.insert(out.end(), p.begin(), p.end());
    }
    return out;
  };
  const Pattern pattern = pattern_of(forward_mixture(net, arch, x));
  const auto eval = [&] {
    const MixtureTrace t = forward_mixture(net, arch, x);
    const double f = cross_entropy(t.output, labels).loss + lambda * expected_latency(arch, table).ms;
    return std::pair{f, pattern_of(t)};
  };
  for (std::size_t l = 0; l < arch.logits.size(); ++l) probe(gc, arch.logits[l], ag.grad[l], pattern, step, rng, eval);
  return gc;
}

GradCase check_expected_latency(Rng& rng, double step) {
  GradCase gc;
  gc.family = "expected_latency";
  std::vector<std::size_t> counts(1 + rng.below(4));
  for (std::size_t& n : counts) n = 2 + rng.below(4);
  ArchParams arch = random_arch(counts, rng, 2.0);
  const LatencyTable table = random_table(counts, rng);
  const ExpectedLatency base = expected_latency(arch, table);
  const auto eval = [&] { return std::pair{expected_latency(arch, table).ms, Pattern{}}; };
  for (std::size_t l = 0; l < arch.logits.size(); ++l) probe(gc, arch.logits[l], base.grad[l], {}, step, rng, eval);
  return gc;
}

std::vector<FamilyReport> run_gradient_suite(std::uint64_t seed, std::size_t per_family) {
  Rng rng(seed);
  std::vector<std::pair<std::string, std::function<GradCase()>>> families;
  const auto random_example = [&rng](std::size_t channels) {
    const std::size_t side = 4 + 2 * rng.below(2);
    return Shape{channels, side, side};
  };
  const auto add_op = [&](std::string name, OpKind op, std::size_t in_channels) {
    families.emplace_back(std::move(name), [&, op, in_channels] { return check_op(op, random_example(in_channels), rng); });
  };
  add_op("identity", Identity{}, 3);
  add_op("zero", Zero{}, 3);
  add_op("conv3x3_relu", Conv{3, 3, true}, 2);
  add_op("conv3x3_linear", Conv{3, 3, false}, 2);
  add_op("dense", Dense{4}, 2);
  add_op("avgpool2_s2", AvgPool{2, 2}, 3);
  add_op("avgpool3_s1", AvgPool{3, 1}, 3);
  add_op("dwsep3x3_e1", DepthwiseSepConv{3, 3, 1}, 3);
  add_op("dwsep3x3_e3", DepthwiseSepConv{3, 3, 3}, 3);
  add_op("dwsep5x5_e3", DepthwiseSepConv{5, 3, 3}, 3);
  add_op("dwsep3x3_e3_widen", DepthwiseSepConv{3, 4, 3}, 2);
  families.emplace_back("cross_entropy", [&] { return check_cross_entropy(1 + rng.below(5), 2 + rng.below(6), rng); });
  families.emplace_back("path_weights", [&] { return check_path(rng); });
  families.emplace_back("mixture_alpha", [&] { return check_mixture(rng, false); });
  families.emplace_back("mixture_alpha_latency", [&] { return check_mixture(rng, true); });
  families.emplace_back("expected_latency", [&] { return check_expected_latency(rng); });

  std::vector<FamilyReport> reports;
  for (const auto& [name, run] : families) {
    FamilyReport rep;
    rep.family = name;
    rep.tolerance = name == "expected_latency" ? 1e-6 : 1e-4;
    for (std::size_t c = 0; c < per_family; ++c) {
      const GradCase gc = run();
      ++rep.cases;
      rep.coords += gc.analytic.size();
      rep.skipped += gc.skipped;
      rep.max_error = std::max(rep.max_error, relative_error(gc.analytic, gc.numeric));
    }
    reports.push_back(rep);
  }
  return reports;
}

}  // namespace fdnas::selftest

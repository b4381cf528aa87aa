// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/supernet/supernet.hpp"

#include <cmath>

#include "fdnas/error.hpp"

namespace fdnas {
namespace {

std::span<const Tensor> slice(const Topology& topo, const ParamSet& w, std::size_t layer, std::size_t cand) {
  const std::size_t begin = topo.param_begin(layer, cand);
  return std::span<const Tensor>(w.tensors).subspan(begin, topo.param_count(layer, cand));
}

void check_batch(const Topology& topo, const Tensor& batch) {
  if (example_shape(batch) != topo.input_shape()) {
    throw ShapeError("batch example shape " + shape_str(example_shape(batch)) + " does not match network input " +
                     shape_str(topo.input_shape()));
  }
}

void check_weights(const Topology& topo, const ParamSet& w) {
  if (w.size() != topo.registry().size()) throw ShapeError("parameter set does not match topology registry");
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

SuperNet SuperNet::create(std::shared_ptr<const Topology> topo, std::uint64_t seed) {
  SuperNet net{std::move(topo), {}};
  net.weights = init_params(*net.topology, seed);
  return net;
}

std::span<const Tensor> SuperNet::candidate_params(std::size_t layer, std::size_t candidate) const {
  return slice(*topology, weights, layer, candidate);
}

void require_compatible(const Topology& topo, const ArchParams& arch) {
  const auto counts = topo.candidate_counts();
  if (arch.logits.size() != counts.size()) {
    throw ShapeError("architecture has " + std::to_string(arch.logits.size()) + " layers, network has " +
                     std::to_string(counts.size()) + " searchable layers");
  }
  for (std::size_t l = 0; l < counts.size(); ++l) {
    if (arch.logits[l].size() != counts[l]) {
      throw ShapeError("architecture layer " + std::to_string(l) + " has " + std::to_string(arch.logits[l].size()) +
                       " logits, expected " + std::to_string(counts[l]));
    }
  }
}

PathTrace forward_path(const Topology& topo, const ParamSet& weights, std::span<const std::size_t> path,
                       const Tensor& batch) {
  check_batch(topo, batch);
  check_weights(topo, weights);
  if (path.size() != topo.size()) throw ShapeError("path length does not match layer count");
  PathTrace trace;
  trace.path.assign(path.begin(), path.end());
  trace.caches.reserve(topo.size());
  Tensor x = batch;
  for (std::size_t li = 0; li < topo.size(); ++li) {
    const auto& cands = topo.layer(li).def.candidates;
    if (path[li] >= cands.size()) throw ArgumentError("path selects a missing candidate at layer " + std::to_string(li));
    auto fwd = op_forward(cands[path[li]], slice(topo, weights, li, path[li]), x);
    trace.caches.push_back(std::move(fwd.cache));
    x = std::move(fwd.output);
  }
  trace.output = std::move(x);
  return trace;
}

GradSet backward_path(const Topology& topo, const ParamSet& weights, const PathTrace& trace,
                      const Tensor& grad_output) {
  check_weights(topo, weights);
  if (trace.caches.size() != topo.size()) throw ArgumentError("trace does not belong to this topology");
  GradSet grads(weights.size());
  Tensor g = grad_output;
  for (std::size_t li = topo.size(); li-- > 0;) {
    const std::size_t cand = trace.path[li];
    const OpKind& op = topo.layer(li).def.candidates[cand];
    auto bwd = op_backward(op, slice(topo, weights, li, cand), trace.caches[li], g,
                           li == 0 ? GradRequest::kParamsOnly : GradRequest::kAll);
    const std::size_t begin = topo.param_begin(li, cand);
    for (std::size_t s = 0; s < bwd.grad_params.size(); ++s) grads[begin + s] = std::move(bwd.grad_params[s]);
    if (li > 0) g = std::move(bwd.grad_input);
  }
  return grads;
}

PathTrace forward_sampled(const SuperNet& net, const GateSample& gates, const Tensor& batch) {
  return forward_path(net.topo(), net.weights, net.topo().path_from_choices(gates.choices), batch);
}

MixtureTrace forward_mixture(const SuperNet& net, const ArchParams& arch, const Tensor& batch) {
  const Topology& topo = net.topo();
  check_batch(topo, batch);
  check_weights(topo, net.weights);
  require_compatible(topo, arch);
  MixtureTrace trace;
  trace.layers.resize(topo.size());
  Tensor x = batch;
  std::size_t s = 0;
  for (std::size_t li = 0; li < topo.size(); ++li) {
    const auto& def = topo.layer(li).def;
    auto& lt = trace.layers[li];
    if (!def.searchable) {
      lt.probs = {1.0};
      lt.active = {0};
      auto fwd = op_forward(def.candidates[0], slice(topo, net.weights, li, 0), x);
      lt.caches.push_back(std::move(fwd.cache));
      x = std::move(fwd.output);
      continue;
    }
    lt.probs = softmax_probs(arch.logits[s++].values());
    Tensor y;
    for (std::size_t n = 0; n < def.candidates.size(); ++n) {
      const double p = lt.probs[n];
      if (p == 0.0) continue;
      auto fwd = op_forward(def.candidates[n], slice(topo, net.weights, li, n), x);
      if (y.empty()) {
        y = Tensor(fwd.output.shape());
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = p * fwd.output[i];
      } else {
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += p * fwd.output[i];
      }
      lt.active.push_back(n);
      lt.caches.push_back(std::move(fwd.cache));
      lt.outputs.push_back(std::move(fwd.output));
    }
    x = std::move(y);
  }
  trace.output = std::move(x);
  return trace;
}

std::vector<Tensor> backward_mixture_arch(const SuperNet& net, const MixtureTrace& trace, const Tensor& grad_output) {
  const Topology& topo = net.topo();
  if (trace.layers.size() != topo.size()) throw ArgumentError("trace does not belong to this topology");
  std::vector<Tensor> grads(topo.num_searchable());
  std::size_t s = topo.num_searchable();
  Tensor g = grad_output;
  for (std::size_t li = topo.size(); li-- > 0;) {
    const auto& def = topo.layer(li).def;
    const auto& lt = trace.layers[li];
    const bool need_input = li > 0;
    if (!def.searchable) {
      if (!need_input) break;
      g = op_backward(def.candidates[0], slice(topo, net.weights, li, 0), lt.caches[0], g, GradRequest::kInputOnly)
              .grad_input;
      continue;
    }
    --s;
    const std::size_t n_cand = def.candidates.size();
    std::vector<double> dldp(n_cand, 0.0);
    for (std::size_t a = 0; a < lt.active.size(); ++a) dldp[lt.active[a]] = dot(g, lt.outputs[a]);
    double mean = 0.0;
    for (std::size_t n = 0; n < n_cand; ++n) mean += lt.probs[n] * dldp[n];
    Tensor ga(Shape{n_cand});
    for (std::size_t n = 0; n < n_cand; ++n) ga[n] = lt.probs[n] * (dldp[n] - mean);
    grads[s] = std::move(ga);
    if (!need_input) break;
    Tensor gx;
    for (std::size_t a = 0; a < lt.active.size(); ++a) {
      const std::size_t n = lt.active[a];
      if (is_zero_op(def.candidates[n])) continue;
      auto bwd = op_backward(def.candidates[n], slice(topo, net.weights, li, n), lt.caches[a], g,
                             GradRequest::kInputOnly);
      const double p = lt.probs[n];
      if (gx.empty()) {
        gx = Tensor(bwd.grad_input.shape());
      }
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += p * bwd.grad_input[i];
    }
    if (gx.empty()) {
      // only the annihilator carried mass: nothing flows further down
      const auto& in = topo.layer(li).input_shape;
      gx = Tensor(with_batch(g.dim(0), in));
    }
    g = std::move(gx);
  }
  // Layers before the first searchable one never contribute; fill any gap.
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].empty()) grads[i] = Tensor(Shape{topo.layer(topo.searchable_layers()[i]).def.candidates.size()});
  }
  return grads;
}

ArchGradient alpha_gradient(const SuperNet& net, const ArchParams& arch, const Tensor& batch,
                            std::span<const Label> labels, const LatencyTable* table, double latency_weight) {
  if (latency_weight != 0.0 && table == nullptr) {
    throw ArgumentError("alpha_gradient: a latency table is required when latency_weight is non-zero");
  }
  auto trace = forward_mixture(net, arch, batch);
  auto ce = cross_entropy(trace.output, labels);
  ArchGradient out;
  out.cross_entropy = ce.loss;
  out.grad = backward_mixture_arch(net, trace, ce.grad);
  out.loss = ce.loss;
  if (table != nullptr) {
    auto lat = expected_latency(arch, *table);
    out.latency_ms = lat.ms;
    if (latency_weight != 0.0) {
      out.loss += latency_weight * lat.ms;
      for (std::size_t l = 0; l < out.grad.size(); ++l) {
        for (std::size_t n = 0; n < out.grad[l].size(); ++n) out.grad[l][n] += latency_weight * lat.grad[l][n];
      }
    }
  }
  if (!std::isfinite(out.loss)) throw NumericError("alpha_gradient: non-finite loss");
  for (const auto& t : out.grad) require_finite(t, "architecture gradient");
  return out;
}

}  // namespace fdnas

// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/nn/optim.hpp"

#include <cmath>
#include <numbers>

#include "fdnas/error.hpp"

namespace fdnas {
namespace {

void check_inputs(std::span<Tensor> params, const GradSet& grads, double lr) {
  if (grads.size() != params.size()) {
    throw ShapeError("optimizer: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(params.size()) + " parameters");
  }
  if (!std::isfinite(lr)) throw NumericError("optimizer: non-finite learning rate");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!grads[i]) continue;
    if (grads[i]->shape() != params[i].shape()) {
      throw ShapeError("optimizer: gradient " + std::to_string(i) + " shape " + shape_str(grads[i]->shape()) +
                       " does not match parameter " + shape_str(params[i].shape()));
    }
    require_finite(*grads[i], "gradient");
  }
}

void ensure_slots(std::span<Tensor> params, OptimizerState& state, bool two_moments) {
  if (state.initialized()) {
    if (state.first.size() != params.size()) throw ShapeError("optimizer state does not match parameter list");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (state.first[i].shape() != params[i].shape()) throw ShapeError("optimizer slot shape mismatch");
    }
    return;
  }
  for (const Tensor& p : params) {
    state.first.emplace_back(p.shape());
    if (two_moments) state.second.emplace_back(p.shape());
  }
  if (two_moments) state.steps.assign(params.size(), 0);
}

}  // namespace

void sgd_momentum_step(std::span<Tensor> params, const GradSet& grads, OptimizerState& state, double lr) {
  if (state.kind != OptimizerKind::kSgdMomentum) throw ArgumentError("sgd step on a non-SGD optimizer state");
  check_inputs(params, grads, lr);
  ensure_slots(params, state, false);
  const double mu = state.sgd.momentum;
  const double wd = state.sgd.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!grads[i]) continue;
    double* w = params[i].data();
    double* v = state.first[i].data();
    const double* g = grads[i]->data();
    for (std::size_t j = 0; j < params[i].size(); ++j) {
      v[j] = mu * v[j] + g[j] + wd * w[j];
      w[j] -= lr * v[j];
    }
    require_finite(params[i], "parameters after SGD step");
  }
}

void adam_step(std::span<Tensor> params, const GradSet& grads, OptimizerState& state, double lr) {
  if (state.kind != OptimizerKind::kAdam) throw ArgumentError("adam step on a non-Adam optimizer state");
  check_inputs(params, grads, lr);
  ensure_slots(params, state, true);
  const auto& c = state.adam;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!grads[i]) continue;
    const std::uint64_t t = ++state.steps[i];
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
    double* w = params[i].data();
    double* m = state.first[i].data();
    double* v = state.second[i].data();
    const double* g = grads[i]->data();
    for (std::size_t j = 0; j < params[i].size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      w[j] -= lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
    require_finite(params[i], "parameters after Adam step");
  }
}

double cosine_lr(std::size_t round, std::size_t total_rounds, double lr0) {
  if (total_rounds == 0) throw ArgumentError("cosine_lr: total_rounds must be positive");
  if (round > total_rounds) throw ArgumentError("cosine_lr: round exceeds total_rounds");
  const double frac = static_cast<double>(round) / static_cast<double>(total_rounds);
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

}  // namespace fdnas

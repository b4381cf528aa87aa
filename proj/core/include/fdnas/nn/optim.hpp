// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fdnas/nn/tensor.hpp"

namespace fdnas {

struct SgdConfig {
  double momentum = 0.9;
  double weight_decay = 3e-4;
  friend bool operator==(const SgdConfig&, const SgdConfig&) = default;
};

// Architecture logits never receive weight decay, so Adam carries none.
struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

enum class OptimizerKind : std::uint8_t { kSgdMomentum = 0, kAdam = 1 };

/// Per-parameter optimizer slots. Slots are created lazily on the first step
/// so a default-constructed state can be attached to any parameter list.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kSgdMomentum;
  SgdConfig sgd;
  AdamConfig adam;
  std::vector<Tensor> first;          // momentum buffer, or Adam first moment
  std::vector<Tensor> second;         // Adam second moment
  std::vector<std::uint64_t> steps;   // Adam step counter per tensor

  static OptimizerState make_sgd(SgdConfig cfg) { return {OptimizerKind::kSgdMomentum, cfg, {}, {}, {}, {}}; }
  static OptimizerState make_adam(AdamConfig cfg) { return {OptimizerKind::kAdam, {}, cfg, {}, {}, {}}; }

  bool initialized() const { return !first.empty(); }

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

/// v <- mu*v + g + lambda*w ;  w <- w - lr*v.  Tensors whose gradient slot is
/// empty are left untouched (no momentum, no decay).
void sgd_momentum_step(std::span<Tensor> params, const GradSet& grads, OptimizerState& state, double lr);

/// Bias-corrected Adam without weight decay.
void adam_step(std::span<Tensor> params, const GradSet& grads, OptimizerState& state, double lr);

/// lr0 * (1 + cos(pi * round / total_rounds)) / 2.
double cosine_lr(std::size_t round, std::size_t total_rounds, double lr0);

}  // namespace fdnas

// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/nn/loss.hpp"

#include <cmath>

#include "fdnas/error.hpp"

namespace fdnas {

LossResult cross_entropy(const Tensor& logits, std::span<const Label> labels) {
  if (logits.rank() != 2) throw ShapeError("cross_entropy expects [batch, classes] logits");
  const std::size_t B = logits.dim(0), C = logits.dim(1);
  if (C < 2) throw ArgumentError("cross_entropy needs at least two classes");
  if (labels.size() != B) throw ShapeError("cross_entropy: label count does not match batch");
  require_finite(logits, "logits");

  LossResult out{0.0, Tensor(logits.shape())};
  const double inv_b = 1.0 / static_cast<double>(B);
  for (std::size_t b = 0; b < B; ++b) {
    const Label y = labels[b];
    if (y >= C) throw ArgumentError("label " + std::to_string(y) + " out of range for " + std::to_string(C) + " classes");
    const double* row = logits.data() + b * C;
    double* grow = out.grad.data() + b * C;
    double mx = row[0];
    for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      grow[c] = std::exp(row[c] - mx);
      z += grow[c];
    }
    out.loss += (std::log(z) - (row[y] - mx)) * inv_b;
    for (std::size_t c = 0; c < C; ++c) grow[c] = grow[c] / z * inv_b;
    grow[y] -= inv_b;
  }
  return out;
}

std::vector<Label> predict(const Tensor& logits) {
  if (logits.rank() != 2) throw ShapeError("predict expects [batch, classes] logits");
  const std::size_t B = logits.dim(0), C = logits.dim(1);
  std::vector<Label> out(B);
  for (std::size_t b = 0; b < B; ++b) {
    const double* row = logits.data() + b * C;
    std::size_t best = 0;
    for (std::size_t c = 1; c < C; ++c) {
      if (row[c] > row[best]) best = c;
    }
    out[b] = static_cast<Label>(best);
  }
  return out;
}

std::size_t count_correct(const Tensor& logits, std::span<const Label> labels) {
  auto pred = predict(logits);
  if (pred.size() != labels.size()) throw ShapeError("count_correct: label count does not match batch");
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) n += pred[i] == labels[i];
  return n;
}

}  // namespace fdnas

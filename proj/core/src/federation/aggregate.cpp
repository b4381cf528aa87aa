// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/federation/aggregate.hpp"

#include <cmath>

#include "fdnas/error.hpp"

namespace fdnas {

std::vector<Tensor> weighted_average(std::span<const std::vector<Tensor>* const> lists, std::span<const double> sizes,
                                     double denominator) {
  if (lists.empty()) throw ArgumentError("aggregate: no updates");
  if (lists.size() != sizes.size()) throw ArgumentError("aggregate: one size per update required");
  double total = 0.0;
  for (double s : sizes) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ArgumentError("aggregate: sizes must be positive and finite");
    total += s;
  }
  if (denominator == 0.0) denominator = total;
  if (!(denominator > 0.0) || !std::isfinite(denominator)) throw ArgumentError("aggregate: zero total size");
  const auto& first = *lists[0];
  for (const auto* l : lists) {
    if (l->size() != first.size()) throw ShapeError("aggregate: updates hold different tensor counts");
    for (std::size_t i = 0; i < first.size(); ++i) {
      if ((*l)[i].shape() != first[i].shape()) {
        throw ShapeError("aggregate: tensor " + std::to_string(i) + " shape mismatch");
      }
    }
  }
  std::vector<Tensor> out;
  out.reserve(first.size());
  for (std::size_t i = 0; i < first.size(); ++i) out.emplace_back(first[i].shape());
  for (std::size_t k = 0; k < lists.size(); ++k) {
    const double w = sizes[k] / denominator;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const Tensor& src = (*lists[k])[i];
      Tensor& dst = out[i];
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += w * src[j];
    }
  }
  for (const auto& t : out) require_finite(t, "aggregated parameters");
  return out;
}

ModelUpdate aggregate(std::span<const ModelUpdate> updates, std::span<const double> sizes, double denominator) {
  std::vector<const std::vector<Tensor>*> ws, as;
  for (const auto& u : updates) {
    ws.push_back(&u.weights.tensors);
    as.push_back(&u.arch.logits);
  }
  ModelUpdate out;
  out.weights.tensors = weighted_average(ws, sizes, denominator);
  out.arch.logits = weighted_average(as, sizes, denominator);
  return out;
}

}  // namespace fdnas

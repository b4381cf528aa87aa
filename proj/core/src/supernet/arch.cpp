// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/supernet/arch.hpp"

#include <algorithm>
#include <cmath>

#include "fdnas/error.hpp"
#include "fdnas/supernet/topology.hpp"

namespace fdnas {

bool ArchParams::all_finite() const {
  return std::all_of(logits.begin(), logits.end(), [](const Tensor& t) { return t.all_finite(); });
}

ArchParams uniform_arch(const Topology& topo) {
  ArchParams a;
  for (std::size_t n : topo.candidate_counts()) a.logits.emplace_back(Shape{n});
  return a;
}

std::vector<double> softmax_probs(std::span<const double> logits) {
  if (logits.empty()) throw ArgumentError("softmax of an empty vector");
  double mx = logits[0];
  for (double v : logits) {
    if (!std::isfinite(v)) throw NumericError("softmax: non-finite logit");
    mx = std::max(mx, v);
  }
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

GateSample sample_gates(const ArchParams& arch, Rng& rng) {
  GateSample g;
  g.choices.reserve(arch.logits.size());
  for (const Tensor& l : arch.logits) {
    const auto p = softmax_probs(l.values());
    const double u = rng.uniform();
    double cum = 0.0;
    std::size_t pick = p.size();
    for (std::size_t i = 0; i < p.size(); ++i) {
      cum += p[i];
      if (u < cum) {
        pick = i;
        break;
      }
    }
    if (pick == p.size()) {
      // rounding left cum slightly below u: take the last candidate with mass
      pick = p.size() - 1;
      while (pick > 0 && p[pick] == 0.0) --pick;
    }
    g.choices.push_back(pick);
  }
  return g;
}

std::vector<std::size_t> argmax_choices(const ArchParams& arch) {
  std::vector<std::size_t> out;
  for (const Tensor& l : arch.logits) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < l.size(); ++i) {
      if (l[i] > l[best]) best = i;
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace fdnas

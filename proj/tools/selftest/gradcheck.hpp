// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fdnas/nn/op_kind.hpp"
#include "fdnas/rng.hpp"

namespace fdnas::selftest {

/// Analytic and central-difference gradients over the probed coordinates of
/// one randomized case. Coordinates whose perturbation flips a ReLU are
/// dropped from both vectors and counted in `skipped`.
struct GradCase {
  std::string family;
  std::vector<double> analytic;
  std::vector<double> numeric;
  std::size_t skipped = 0;
};

/// ||a - n|| / max(||a||, ||n||, 1e-6) over whole vectors.
double relative_error(std::span<const double> analytic, std::span<const double> numeric);

/// d/d(params, input) of sum(r * op(x)) for random r.
GradCase check_op(const OpKind& op, const Shape& example, Rng& rng, double step = 1e-5);
/// d/d(logits) of the mean cross-entropy.
GradCase check_cross_entropy(std::size_t batch, std::size_t classes, Rng& rng, double step = 1e-5);
/// d/d(weights) of the cross-entropy along a random path through a small SuperNet.
GradCase check_path(Rng& rng, double step = 1e-5);
/// d/d(alpha) of CE(mixture) + lambda * expected latency on a small SuperNet.
GradCase check_mixture(Rng& rng, bool with_latency, double step = 1e-5);
/// d/d(alpha) of the expected latency alone.
GradCase check_expected_latency(Rng& rng, double step = 1e-6);

struct FamilyReport {
  std::string family;
  std::size_t cases = 0;
  std::size_t coords = 0;
  std::size_t skipped = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool pass() const { return cases > 0 && max_error <= tolerance; }
};

/// Runs `per_family` randomized cases for every op family, the loss, whole
/// paths, the mixture logits and the expected latency.
std::vector<FamilyReport> run_gradient_suite(std::uint64_t seed, std::size_t per_family);

}  // namespace fdnas::selftest

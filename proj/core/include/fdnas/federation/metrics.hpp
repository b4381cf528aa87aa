// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>

namespace fdnas {

struct RoundMetrics {
  std::size_t round = 0;  // rounds completed, starting at 1
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::optional<double> fed_avg_acc;
  std::optional<double> mean_local_acc;
  double expected_latency_ms = 0.0;
  double wall_clock_s = 0.0;
};

inline constexpr int kMetricsCsvVersion = 1;

/// Header comment "# fdnas-metrics v1 config=<hex> seed=<n>", then a fixed
/// column row and one line per round. Unmeasured accuracies are empty fields.
std::string format_metrics_csv(std::span<const RoundMetrics> rows, std::uint64_t config_hash, std::uint64_t seed);
void write_metrics_csv(const std::filesystem::path& path, std::span<const RoundMetrics> rows,
                       std::uint64_t config_hash, std::uint64_t seed);

/// Round-trips the deterministic columns (everything except wall_clock_s).
bool same_trajectory(std::span<const RoundMetrics> a, std::span<const RoundMetrics> b);

}  // namespace fdnas

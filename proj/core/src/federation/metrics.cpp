// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/federation/metrics.hpp"

#include <cstdio>

#include "fdnas/io/binary.hpp"

namespace fdnas {
namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

}  // namespace

std::string format_metrics_csv(std::span<const RoundMetrics> rows, std::uint64_t config_hash, std::uint64_t seed) {
  std::string out = "# fdnas-metrics v" + std::to_string(kMetricsCsvVersion) + " config=" + io::hex64(config_hash) +
                    " seed=" + std::to_string(seed) + "\n";
  out += "round,train_loss,val_loss,fed_avg_acc,mean_local_acc,expected_latency_ms,wall_clock_s\n";
  for (const auto& r : rows) {
    out += std::to_string(r.round) + "," + num(r.train_loss) + "," + num(r.val_loss) + "," + opt(r.fed_avg_acc) + "," +
           opt(r.mean_local_acc) + "," + num(r.expected_latency_ms) + "," + num(r.wall_clock_s) + "\n";
  }
  return out;
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const RoundMetrics> rows,
                       std::uint64_t config_hash, std::uint64_t seed) {
  io::write_text_file(path, format_metrics_csv(rows, config_hash, seed));
}

bool same_trajectory(std::span<const RoundMetrics> a, std::span<const RoundMetrics> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a[i];
    const auto& y = b[i];
    if (x.round != y.round || x.train_loss != y.train_loss || x.val_loss != y.val_loss ||
        x.fed_avg_acc != y.fed_avg_acc || x.mean_local_acc != y.mean_local_acc ||
        x.expected_latency_ms != y.expected_latency_ms) {
      return false;
    }
  }
  return true;
}

}  // namespace fdnas

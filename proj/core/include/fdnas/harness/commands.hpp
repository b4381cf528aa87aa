// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>

#include "fdnas/harness/config.hpp"

namespace fdnas {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitDiverged = 2;
inline constexpr int kExitIo = 3;

/// Command-line overrides applied on top of a loaded config.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::size_t> threads;
  bool strict_paper_aggregation = false;
};

ExperimentConfig load_with_overrides(const std::filesystem::path& config_path, const Overrides& o);

/// search: checkpoint.bin, metrics.csv, summary.json in cfg.out_dir.
void cmd_search(const ExperimentConfig& cfg, std::ostream& out);
/// cluster: one group_<g>/ directory per group with checkpoint.bin, net.bin,
/// arch.txt, metrics.csv and summary.json.
void cmd_cluster(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint, std::ostream& out);
/// derive: net.bin, arch.txt and report.json in out_dir.
void cmd_derive(const std::filesystem::path& checkpoint, const std::filesystem::path& out_dir, std::ostream& out);
/// retrain: retrained.bin, retrain_metrics.csv and retrain_summary.json.
void cmd_retrain(const ExperimentConfig& cfg, const std::filesystem::path& net, std::ostream& out);
/// eval: prints both accuracies and a per-client table; writes eval.json.
void cmd_eval(const ExperimentConfig& cfg, const std::filesystem::path& net, std::ostream& out);

/// Runs fn and maps exceptions to exit codes, printing the message to err.
int guarded(const std::function<void()>& fn, std::ostream& err);

}  // namespace fdnas

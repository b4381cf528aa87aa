// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fdnas/nn/tensor.hpp"
#include "fdnas/supernet/arch.hpp"

namespace fdnas {

/// Per-(searchable layer, candidate) latency in milliseconds for one
/// hardware profile. Every pair must be present.
class LatencyTable {
 public:
  LatencyTable() = default;
  LatencyTable(std::string profile, std::vector<std::vector<double>> ms);

  const std::string& profile() const { return profile_; }
  std::size_t num_layers() const { return ms_.size(); }
  double at(std::size_t layer, std::size_t candidate) const;
  const std::vector<std::vector<double>>& values() const { return ms_; }

  /// Throws ArgumentError unless the table has exactly `counts[l]` entries
  /// for every searchable layer l.
  void require_covers(std::span<const std::size_t> counts) const;

  friend bool operator==(const LatencyTable&, const LatencyTable&) = default;

 private:
  std::string profile_;
  std::vector<std::vector<double>> ms_;
};

struct ExpectedLatency {
  double ms = 0.0;
  std::vector<Tensor> grad;  // d ms / d logits, per searchable layer
};

/// sum_l sum_n softmax(alpha_l)_n * table[l][n], with its logit gradient
/// p_i * (lat_i - E_l[lat]).
ExpectedLatency expected_latency(const ArchParams& arch, const LatencyTable& table);

/// Latency of a discrete per-layer choice.
double choice_latency(const LatencyTable& table, std::span<const std::size_t> choices);

// Text format: CSV with header `profile,layer,candidate,latency_ms`, one
// record per pair; '#' starts a comment line. Layer and candidate are
// zero-based indices into the searchable layers and their candidate lists.

/// Parses all profiles in `text`; each must cover `counts` exactly.
std::map<std::string, LatencyTable> parse_latency_tables(std::string_view text,
                                                         std::span<const std::size_t> counts);
std::map<std::string, LatencyTable> load_latency_tables(const std::filesystem::path& path,
                                                        std::span<const std::size_t> counts);
std::string format_latency_tables(std::span<const LatencyTable> tables);

}  // namespace fdnas

// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/supernet/latency.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "fdnas/error.hpp"
#include "fdnas/io/binary.hpp"

namespace fdnas {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

std::size_t to_index(std::string_view s, std::size_t line_no) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw FormatError("latency table line " + std::to_string(line_no) + ": bad index '" + std::string(s) + "'");
  }
  return v;
}

double to_double(std::string_view s, std::size_t line_no) {
  std::string tmp(s);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tmp, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != tmp.size()) {
    throw FormatError("latency table line " + std::to_string(line_no) + ": bad latency '" + tmp + "'");
  }
  return v;
}

}  // namespace

LatencyTable::LatencyTable(std::string profile, std::vector<std::vector<double>> ms)
    : profile_(std::move(profile)), ms_(std::move(ms)) {
  for (const auto& row : ms_) {
    for (double v : row) {
      if (!std::isfinite(v) || v < 0.0) throw ArgumentError("latency entries must be finite and non-negative");
    }
  }
}

double LatencyTable::at(std::size_t layer, std::size_t candidate) const {
  if (layer >= ms_.size() || candidate >= ms_[layer].size()) {
    throw ArgumentError("latency table '" + profile_ + "' has no entry for layer " + std::to_string(layer) +
                        ", candidate " + std::to_string(candidate));
  }
  return ms_[layer][candidate];
}

void LatencyTable::require_covers(std::span<const std::size_t> counts) const {
  if (ms_.size() != counts.size()) {
    throw ArgumentError("latency table '" + profile_ + "' covers " + std::to_string(ms_.size()) +
                        " layers, network has " + std::to_string(counts.size()));
  }
  for (std::size_t l = 0; l < counts.size(); ++l) {
    if (ms_[l].size() != counts[l]) {
      throw ArgumentError("latency table '" + profile_ + "' layer " + std::to_string(l) + " has " +
                          std::to_string(ms_[l].size()) + " entries, expected " + std::to_string(counts[l]));
    }
  }
}

ExpectedLatency expected_latency(const ArchParams& arch, const LatencyTable& table) {
  std::vector<std::size_t> counts;
  for (const auto& l : arch.logits) counts.push_back(l.size());
  table.require_covers(counts);
  ExpectedLatency out;
  for (std::size_t l = 0; l < arch.logits.size(); ++l) {
    const auto p = softmax_probs(arch.logits[l].values());
    double mean = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n) mean += p[n] * table.at(l, n);
    out.ms += mean;
    Tensor g(Shape{p.size()});
    for (std::size_t n = 0; n < p.size(); ++n) g[n] = p[n] * (table.at(l, n) - mean);
    out.grad.push_back(std::move(g));
  }
  return out;
}

double choice_latency(const LatencyTable& table, std::span<const std::size_t> choices) {
  if (choices.size() != table.num_layers()) throw ArgumentError("choice count does not match latency table");
  double total = 0.0;
  for (std::size_t l = 0; l < choices.size(); ++l) total += table.at(l, choices[l]);
  return total;
}

std::map<std::string, LatencyTable> parse_latency_tables(std::string_view text,
                                                         std::span<const std::size_t> counts) {
  struct Partial {
    std::vector<std::vector<double>> ms;
    std::vector<std::vector<bool>> seen;
  };
  std::map<std::string, Partial> partial;
  bool header_seen = false;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto f = split_csv(line);
    if (!header_seen) {
      if (f.size() != 4 || f[0] != "profile" || f[1] != "layer" || f[2] != "candidate" || f[3] != "latency_ms") {
        throw FormatError("latency table: expected header 'profile,layer,candidate,latency_ms'");
      }
      header_seen = true;
      continue;
    }
    if (f.size() != 4) throw FormatError("latency table line " + std::to_string(line_no) + ": expected 4 fields");
    if (f[0].empty()) throw FormatError("latency table line " + std::to_string(line_no) + ": empty profile");
    const std::size_t layer = to_index(f[1], line_no);
    const std::size_t cand = to_index(f[2], line_no);
    const double ms = to_double(f[3], line_no);
    if (layer >= counts.size() || cand >= counts[layer]) {
      throw FormatError("latency table line " + std::to_string(line_no) + ": (layer " + std::to_string(layer) +
                        ", candidate " + std::to_string(cand) + ") does not exist in the network");
    }
    if (!std::isfinite(ms) || ms < 0.0) {
      throw FormatError("latency table line " + std::to_string(line_no) + ": latency must be finite and >= 0");
    }
    auto& p = partial[std::string(f[0])];
    if (p.ms.empty()) {
      for (std::size_t n : counts) {
        p.ms.emplace_back(n, 0.0);
        p.seen.emplace_back(n, false);
      }
    }
    if (p.seen[layer][cand]) {
      throw FormatError("latency table line " + std::to_string(line_no) + ": duplicate entry");
    }
    p.seen[layer][cand] = true;
    p.ms[layer][cand] = ms;
  }
  if (!header_seen) throw FormatError("latency table: missing header");
  std::map<std::string, LatencyTable> out;
  for (auto& [name, p] : partial) {
    for (std::size_t l = 0; l < p.seen.size(); ++l) {
      for (std::size_t n = 0; n < p.seen[l].size(); ++n) {
        if (!p.seen[l][n]) {
          throw FormatError("latency table profile '" + name + "' is incomplete: missing layer " +
                            std::to_string(l) + ", candidate " + std::to_string(n));
        }
      }
    }
    out.emplace(name, LatencyTable(name, std::move(p.ms)));
  }
  return out;
}

std::map<std::string, LatencyTable> load_latency_tables(const std::filesystem::path& path,
                                                        std::span<const std::size_t> counts) {
  return parse_latency_tables(io::read_text_file(path), counts);
}

std::string format_latency_tables(std::span<const LatencyTable> tables) {
  std::ostringstream out;
  out.precision(17);
  out << "profile,layer,candidate,latency_ms\n";
  for (const auto& t : tables) {
    for (std::size_t l = 0; l < t.num_layers(); ++l) {
      for (std::size_t n = 0; n < t.values()[l].size(); ++n) {
        out << t.profile() << ',' << l << ',' << n << ',' << t.at(l, n) << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace fdnas

// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "fdnas/clustering/cluster.hpp"
#include "fdnas/data/partition.hpp"
#include "fdnas/federation/server.hpp"
#include "fdnas/supernet/topology.hpp"

namespace fdnas {

struct DataConfig {
  std::string source = "synthetic";  // "synthetic" or "file"
  std::filesystem::path path;        // dataset file when source == "file"
  SyntheticConfig synthetic;         // seed is taken from the experiment
};

struct PartitionConfig {
  std::string scheme = "label_shards";  // "label_shards", "iid" or "groups"
  std::size_t num_groups = 3;
  std::vector<ShardGroup> groups;       // scheme == "groups"
  SplitFractions split;
};

struct SearchConfig {
  std::size_t rounds = 40;
  std::size_t local_epochs = 5;
  std::size_t batch_size = 32;
  double w_lr = 0.05;
  SgdConfig sgd;
  double grad_clip = 5.0;  // global-norm bound on weight gradients, 0 disables
  double alpha_lr = 0.03;
  AdamConfig adam;
  double latency_weight = 0.0;
  std::string latency_profile;
  double participation = 1.0;
  std::size_t eval_every = 0;
};

struct ClusterConfig {
  std::filesystem::path profiles;
  std::string key = "hardware";  // "hardware" or "tag"
  std::size_t rounds = 10;
  double latency_weight = 0.0;
  bool naive = false;
};

struct RetrainConfig {
  std::size_t rounds = 40;
  std::size_t local_epochs = 1;
  std::size_t batch_size = 32;
  double lr = 0.05;
};

struct EvalConfig {
  std::size_t finetune_epochs = 5;
  std::size_t batch_size = 32;
  double lr = 0.01;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::size_t num_clients = 6;
  DataConfig data;
  PartitionConfig partition;
  SearchSpaceConfig space;
  SearchConfig search;
  std::filesystem::path latency_tables;
  ClusterConfig cluster;
  RetrainConfig retrain;
  EvalConfig eval;
  bool strict_paper_aggregation = false;
  // Execution settings; excluded from the config hash.
  std::size_t threads = 1;
  std::filesystem::path out_dir = "out";
};

/// Parses JSON text; relative paths resolve against base_dir. Throws
/// ConfigError naming the offending field.
ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of every result-affecting field except the seed.
std::string canonical_config(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

FederationConfig search_federation(const ExperimentConfig& cfg);
FederationConfig retrain_federation(const ExperimentConfig& cfg);
GroupSearchConfig cluster_federation(const ExperimentConfig& cfg, const std::map<std::string, LatencyTable>* tables);
EvalOptions eval_options(const ExperimentConfig& cfg);

/// Everything a run needs that is derived from the config alone.
struct Experiment {
  LabeledDataset dataset;
  ShardPlan plan;
  std::vector<ClientData> clients;
  std::shared_ptr<const Topology> topology;
  std::map<std::string, LatencyTable> latency_tables;
};

Experiment prepare_experiment(const ExperimentConfig& cfg);

}  // namespace fdnas

// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "fdnas/error.hpp"
#include "fdnas/harness/config.hpp"
#include "fdnas/io/binary.hpp"
#include "fdnas/supernet/serialize.hpp"

namespace fdnas {
namespace {

namespace fs = std::filesystem;

const fs::path kConfigs = FDNAS_CONFIG_DIR;

std::string config_error(std::string_view json) {
  try {
    parse_config(json);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FDNAS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("fdnas_harness_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

TEST(Config, EmptyObjectGivesDeskDefaults) {
  const ExperimentConfig c = parse_config("{}");
  EXPECT_EQ(c.num_clients, 6u);
  EXPECT_EQ(c.search.rounds, 40u);
  EXPECT_EQ(c.search.local_epochs, 5u);
  EXPECT_EQ(c.search.batch_size, 32u);
  EXPECT_DOUBLE_EQ(c.search.w_lr, 0.05);
  EXPECT_DOUBLE_EQ(c.search.sgd.weight_decay, 3e-4);
  EXPECT_EQ(c.space.num_layers, 6u);
}

TEST(Config, ErrorsNameTheOffendingField) {
  EXPECT_NE(config_error(R"({"search": {"bogus": 1}})").find("search.bogus"), std::string::npos);
  EXPECT_NE(config_error(R"({"search": {"w_lr": -1}})").find("search.w_lr"), std::string::npos);
  EXPECT_NE(config_error(R"({"search": {"rounds": "many"}})").find("search.rounds"), std::string::npos);
  EXPECT_NE(config_error(R"({"num_clients": 0})").find("num_clients"), std::string::npos);
  EXPECT_NE(config_error(R"({"search_space": {"candidates": ["zero", "maxpool"]}})").find("search_space"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"search": {"latency_weight": 0.1}})").find("latency_profile"), std::string::npos);
  EXPECT_NE(config_error("[1, 2]"), "");
  EXPECT_NE(config_error("{not json"), "");
}

TEST(Config, HashIgnoresSeedAndExecutionSettings) {
  ExperimentConfig a = parse_config("{}");
  ExperimentConfig b = a;
  b.seed = 99;
  b.threads = 4;
  b.out_dir = "elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.search.rounds = 41;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(canonical_config(a), canonical_config(parse_config(canonical_config(a))));
}

TEST(Config, BundledConfigsLoad) {
  for (const char* name : {"desk.json", "minimal.json", "full_scale.json"}) {
    EXPECT_NO_THROW(load_config(kConfigs / name)) << name;
  }
  const ExperimentConfig full = load_config(kConfigs / "full_scale.json");
  EXPECT_EQ(full.search.rounds, 125u);
  EXPECT_EQ(full.search.batch_size, 256u);
  EXPECT_EQ(full.retrain.rounds, 250u);
  const ExperimentConfig desk = load_config(kConfigs / "desk.json");
  EXPECT_EQ(desk.latency_tables, kConfigs / "latency.csv");
  EXPECT_EQ(desk.cluster.profiles, kConfigs / "clients.csv");
}

TEST(Config, PreparedExperimentIsSeedDeterministic) {
  ExperimentConfig c = parse_config(R"({"data": {"per_class": 20}})");
  const Experiment a = prepare_experiment(c);
  const Experiment b = prepare_experiment(c);
  EXPECT_EQ(a.dataset, b.dataset);
  EXPECT_EQ(a.clients.size(), 6u);
  EXPECT_EQ(a.clients[3].train, b.clients[3].train);
}

TEST(Cli, InvalidConfigExitsWithConfigError) {
  const fs::path d = fresh_dir("badcfg");
  io::write_text_file(d / "bad.json", R"({"search": {"roundz": 3}})");
  EXPECT_EQ(run_cli("search --config " + (d / "bad.json").string() + " --out-dir " + (d / "out").string()), 1);
  EXPECT_FALSE(fs::exists(d / "out" / "checkpoint.bin"));
  EXPECT_EQ(run_cli("selftest --only 42"), 1);
  EXPECT_EQ(run_cli("bogus"), 1);
}

TEST(Cli, MissingLatencyTableFailsCleanly) {
  const fs::path d = fresh_dir("nolat");
  io::write_text_file(d / "lat.json",
                      R"({"latency_tables": "missing.csv",
                          "search": {"rounds": 1, "latency_weight": 0.1, "latency_profile": "gpu"}})");
  const int rc = run_cli("search --config " + (d / "lat.json").string() + " --out-dir " + (d / "out").string());
  EXPECT_NE(rc, 0);
  EXPECT_TRUE(!fs::exists(d / "out") || fs::is_empty(d / "out"));
}

TEST(Cli, MinimalPipelineIsReproducible) {
  const fs::path d = fresh_dir("pipeline");
  const std::string cfg = " --config " + (kConfigs / "minimal.json").string();
  ASSERT_EQ(run_cli("search" + cfg + " --out-dir " + (d / "a").string()), 0);
  for (const char* f : {"checkpoint.bin", "metrics.csv", "summary.json"}) EXPECT_TRUE(fs::exists(d / "a" / f)) << f;
  ASSERT_EQ(run_cli("search" + cfg + " --threads 2 --out-dir " + (d / "b").string()), 0);
  EXPECT_EQ(io::read_file(d / "a" / "checkpoint.bin"), io::read_file(d / "b" / "checkpoint.bin"));
  ASSERT_EQ(run_cli("search" + cfg + " --seed 2 --out-dir " + (d / "c").string()), 0);
  EXPECT_NE(io::read_file(d / "a" / "checkpoint.bin"), io::read_file(d / "c" / "checkpoint.bin"));

  const std::string ckpt = " --checkpoint " + (d / "a" / "checkpoint.bin").string();
  ASSERT_EQ(run_cli("derive" + ckpt + " --out-dir " + (d / "a").string()), 0);
  for (const char* f : {"net.bin", "arch.txt", "report.json"}) EXPECT_TRUE(fs::exists(d / "a" / f)) << f;
  const std::string net = " --checkpoint " + (d / "a" / "net.bin").string();
  ASSERT_EQ(run_cli("retrain" + cfg + net + " --out-dir " + (d / "a").string()), 0);
  EXPECT_TRUE(fs::exists(d / "a" / "retrained.bin"));
  ASSERT_EQ(run_cli("eval" + cfg + " --checkpoint " + (d / "a" / "retrained.bin").string() + " --out-dir " +
                    (d / "a").string()),
            0);
  EXPECT_TRUE(fs::exists(d / "a" / "eval.json"));
  ASSERT_EQ(run_cli("cluster" + cfg + ckpt + " --out-dir " + (d / "a").string()), 0);
  EXPECT_TRUE(fs::exists(d / "a" / "group_0" / "net.bin"));
  EXPECT_TRUE(fs::exists(d / "a" / "group_1" / "net.bin"));
  EXPECT_FALSE(fs::exists(d / "a" / "group_2"));
}

TEST(Cli, ClusterBudgetZeroMatchesDerive) {
  const fs::path d = fresh_dir("budget0");
  // Same config with no refinement rounds; profiles resolve next to the copy.
  std::string text = io::read_text_file(kConfigs / "minimal.json");
  text.replace(text.find("\"rounds\": 2"), 11, "\"rounds\": 0");
  io::write_text_file(d / "zero.json", text);
  fs::copy_file(kConfigs / "clients.csv", d / "clients.csv");
  const std::string cfg = " --config " + (d / "zero.json").string();
  ASSERT_EQ(run_cli("search" + cfg + " --out-dir " + d.string()), 0);
  const std::string ckpt = " --checkpoint " + (d / "checkpoint.bin").string();
  ASSERT_EQ(run_cli("derive" + ckpt + " --out-dir " + d.string()), 0);
  ASSERT_EQ(run_cli("cluster" + cfg + ckpt + " --out-dir " + d.string()), 0);
  const NetFile want = load_net_file(d / "net.bin");
  for (const char* g : {"group_0", "group_1"}) {
    const NetFile got = load_net_file(d / g / "net.bin");
    EXPECT_EQ(got.net.choices, want.net.choices);
    EXPECT_EQ(got.net.weights, want.net.weights);
  }
}

TEST(Cli, CorruptCheckpointIsAnIoError) {
  const fs::path d = fresh_dir("corrupt");
  io::write_text_file(d / "junk.bin", "not a checkpoint");
  EXPECT_EQ(run_cli("derive --checkpoint " + (d / "junk.bin").string() + " --out-dir " + d.string()), 3);
}

}  // namespace
}  // namespace fdnas

// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fdnas/harness/commands.hpp"
#include "selftest/acceptance.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Federated direct architecture search simulator"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, net_path, out_dir, only;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool strict = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Override the experiment seed");
    cmd->add_option("--out-dir", out_dir, "Override the output directory");
    cmd->add_option("--threads", threads, "Worker threads for client updates")->check(CLI::PositiveNumber);
    cmd->add_flag("--strict-paper-aggregation", strict,
                  "Divide group aggregates by the total over all clients");
  };

  auto* search = app.add_subcommand("search", "Federated SuperNet search");
  search->add_option("--config", config_path, "Experiment config (JSON)")->required();
  add_common(search);

  auto* cluster = app.add_subcommand("cluster", "Per-group refinement of a search checkpoint");
  cluster->add_option("--config", config_path, "Experiment config (JSON)")->required();
  cluster->add_option("--checkpoint", checkpoint_path, "Search checkpoint")->required();
  add_common(cluster);

  auto* derive = app.add_subcommand("derive", "Derive the normal net from a checkpoint");
  derive->add_option("--checkpoint", checkpoint_path, "Search or group checkpoint")->required();
  derive->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* retrain = app.add_subcommand("retrain", "FedAvg scratch training of a derived net");
  retrain->add_option("--config", config_path, "Experiment config (JSON)")->required();
  retrain->add_option("--checkpoint", net_path, "Derived net file (net.bin)")->required();
  add_common(retrain);

  auto* eval = app.add_subcommand("eval", "Federated-averaged and mean local accuracy");
  eval->add_option("--config", config_path, "Experiment config (JSON)")->required();
  eval->add_option("--checkpoint", net_path, "Net file (net.bin or retrained.bin)")->required();
  add_common(eval);

  auto* selftest = app.add_subcommand("selftest", "Run the acceptance suite");
  selftest->add_option("--only", only, "Comma-separated criterion numbers");
  selftest->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // help and version requests exit 0; argument errors are config errors
    return app.exit(e) == 0 ? fdnas::kExitOk : fdnas::kExitConfig;
  }

  fdnas::Overrides ov;
  if (app.got_subcommand(search) || app.got_subcommand(cluster) || app.got_subcommand(retrain) ||
      app.got_subcommand(eval)) {
    auto* cmd = app.get_subcommands().front();
    if (cmd->count("--seed")) ov.seed = seed;
    if (cmd->count("--out-dir")) ov.out_dir = fs::path(out_dir);
    if (cmd->count("--threads")) ov.threads = threads;
    ov.strict_paper_aggregation = strict;
  }

  if (app.got_subcommand(selftest)) {
    int code = fdnas::kExitOk;
    const int rc = fdnas::guarded([&] { code = fdnas::selftest::run_acceptance(only, threads, std::cout); }, std::cerr);
    return rc != fdnas::kExitOk ? rc : code;
  }
  if (app.got_subcommand(derive)) {
    return fdnas::guarded([&] { fdnas::cmd_derive(checkpoint_path, out_dir, std::cout); }, std::cerr);
  }
  return fdnas::guarded(
      [&] {
        const auto cfg = fdnas::load_with_overrides(config_path, ov);
        if (app.got_subcommand(search)) {
          fdnas::cmd_search(cfg, std::cout);
        } else if (app.got_subcommand(cluster)) {
          fdnas::cmd_cluster(cfg, checkpoint_path, std::cout);
        } else if (app.got_subcommand(retrain)) {
          fdnas::cmd_retrain(cfg, net_path, std::cout);
        } else {
          fdnas::cmd_eval(cfg, net_path, std::cout);
        }
      },
      std::cerr);
}

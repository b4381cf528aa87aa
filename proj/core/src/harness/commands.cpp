// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/harness/commands.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

#include "fdnas/error.hpp"
#include "fdnas/federation/checkpoint.hpp"
#include "fdnas/federation/retrain.hpp"
#include "fdnas/io/binary.hpp"
#include "fdnas/supernet/serialize.hpp"

namespace fdnas {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json metrics_json(const RoundMetrics& m) {
  json j = {{"round", m.round},
            {"train_loss", m.train_loss},
            {"val_loss", m.val_loss},
            {"expected_latency_ms", m.expected_latency_ms}};
  j["fed_avg_acc"] = m.fed_avg_acc ? json(*m.fed_avg_acc) : json(nullptr);
  j["mean_local_acc"] = m.mean_local_acc ? json(*m.mean_local_acc) : json(nullptr);
  return j;
}

std::string fmt(double v, int prec = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string arch_listing(const NormalNet& net) {
  std::string s;
  const auto names = net.layer_names();
  for (std::size_t i = 0; i < names.size(); ++i) s += "layer " + std::to_string(i) + ": " + names[i] + "\n";
  const auto fp = count_flops_params(net);
  s += "macs " + std::to_string(fp.macs) + "\nparams " + std::to_string(fp.params) + "\n";
  return s;
}

json net_json(const NormalNet& net) {
  const auto fp = count_flops_params(net);
  return {{"layers", net.layer_names()}, {"choices", net.choices}, {"macs", fp.macs}, {"params", fp.params}};
}

const LatencyTable* search_table(const ExperimentConfig& cfg, const Experiment& x) {
  if (cfg.search.latency_profile.empty()) return nullptr;
  return &x.latency_tables.at(cfg.search.latency_profile);
}

NetFile load_net_for(const ExperimentConfig& cfg, const fs::path& path) {
  NetFile f = load_net_file(path);
  if (f.net.topology->input_shape() != cfg.space.input_shape ||
      f.net.topology->output_shape() != Shape{cfg.space.num_classes}) {
    throw ConfigError("net " + path.string() + " does not match the configured input shape or class count");
  }
  return f;
}

}  // namespace

ExperimentConfig load_with_overrides(const fs::path& config_path, const Overrides& o) {
  ExperimentConfig cfg = load_config(config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.threads) {
    if (*o.threads == 0) throw ConfigError("--threads: must be at least 1");
    cfg.threads = *o.threads;
  }
  if (o.strict_paper_aggregation) cfg.strict_paper_aggregation = true;
  return cfg;
}

void cmd_search(const ExperimentConfig& cfg, std::ostream& out) {
  const Experiment x = prepare_experiment(cfg);
  FederationConfig fc = search_federation(cfg);
  fc.local.latency = search_table(cfg, x);
  if (cfg.strict_paper_aggregation) {
    double all = 0.0;
    for (const auto& c : x.clients) all += static_cast<double>(c.num_examples());
    fc.aggregation_denominator = all;
  }
  const std::uint64_t hash = config_hash(cfg);
  out << "search: " << x.clients.size() << " clients, " << fc.rounds << " rounds, config " << io::hex64(hash)
      << ", seed " << cfg.seed << "\n";
  auto state = init_server(x.topology, cfg.seed, x.clients.size(), fc.local.sgd, fc.local.adam);
  RoundCallback progress = [&](const ServerState&, const RoundMetrics& m) {
    out << "round " << m.round << " train_loss " << fmt(m.train_loss) << " val_loss " << fmt(m.val_loss);
    if (m.fed_avg_acc) out << " fed_acc " << fmt(*m.fed_avg_acc);
    out << "\n";
  };
  auto run = run_rounds(std::move(state), x.clients, fc, nullptr, &progress);
  Checkpoint ckpt{hash, cfg.seed, run.state};
  const auto derived = derive_normal_net(run.state.net, run.state.arch);
  json summary = {{"command", "search"},
                  {"config_hash", io::hex64(hash)},
                  {"seed", cfg.seed},
                  {"rounds", run.state.round},
                  {"checkpoint_digest", io::hex64(checkpoint_digest(ckpt))},
                  {"derived", net_json(derived)}};
  if (!run.history.empty()) summary["final"] = metrics_json(run.history.back());
  save_checkpoint(cfg.out_dir / "checkpoint.bin", ckpt);
  write_metrics_csv(cfg.out_dir / "metrics.csv", run.history, hash, cfg.seed);
  io::write_text_file(cfg.out_dir / "summary.json", summary.dump(2) + "\n");
  out << "derived:";
  for (const auto& n : derived.layer_names()) out << " " << n;
  out << "\nwrote " << (cfg.out_dir / "checkpoint.bin").string() << "\n";
}

void cmd_cluster(const ExperimentConfig& cfg, const fs::path& checkpoint, std::ostream& out) {
  const Experiment x = prepare_experiment(cfg);
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  if (!(ckpt.state.net.topo() == *x.topology)) {
    throw ConfigError("checkpoint " + checkpoint.string() + ": topology does not match the configured search space");
  }
  if (cfg.cluster.profiles.empty()) throw ConfigError("cluster.profiles: required for the cluster command");
  const auto key = cfg.cluster.key == "tag" ? ClusterKey::kTag : ClusterKey::kHardware;
  const ClusterSpec spec = split_clusters(x.clients, key, cfg.cluster.rounds);
  const auto gcfg = cluster_federation(cfg, &x.latency_tables);
  const std::uint64_t hash = config_hash(cfg);
  out << "cluster: " << spec.groups.size() << " groups, " << cfg.cluster.rounds << " rounds each"
      << (cfg.cluster.naive ? " (from scratch)" : " (inherited)") << "\n";
  const auto results = cfg.cluster.naive ? naive_group_search(x.topology, spec, x.clients, gcfg)
                                         : run_cfdnas(ckpt.state, spec, x.clients, gcfg);
  for (const auto& r : results) {
    const auto& g = spec.groups[r.group];
    const fs::path dir = cfg.out_dir / ("group_" + std::to_string(r.group));
    Checkpoint gc{hash, cfg.seed, r.state};
    json members = g.members;
    json summary = {{"command", "cluster"},
                    {"config_hash", io::hex64(hash)},
                    {"seed", cfg.seed},
                    {"group", r.group},
                    {"key", g.key},
                    {"hardware", g.hardware},
                    {"members", members},
                    {"rounds", g.budget},
                    {"strict_paper_aggregation", cfg.strict_paper_aggregation},
                    {"derived", net_json(r.derived)}};
    if (!r.history.empty()) summary["final"] = metrics_json(r.history.back());
    save_checkpoint(dir / "checkpoint.bin", gc);
    save_net_file(dir / "net.bin", NetFile{hash, cfg.seed, r.derived});
    io::write_text_file(dir / "arch.txt", arch_listing(r.derived));
    write_metrics_csv(dir / "metrics.csv", r.history, hash, cfg.seed);
    io::write_text_file(dir / "summary.json", summary.dump(2) + "\n");
    out << "group " << r.group << " [" << g.key << "] members";
    for (auto m : g.members) out << " " << m;
    out << ":";
    for (const auto& n : r.derived.layer_names()) out << " " << n;
    out << "\n";
  }
}

void cmd_derive(const fs::path& checkpoint, const fs::path& out_dir, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const auto net = derive_normal_net(ckpt.state.net, ckpt.state.arch);
  const auto max_macs = max_path_flops(ckpt.state.net.topo());
  json report = net_json(net);
  report["config_hash"] = io::hex64(ckpt.config_hash);
  report["seed"] = ckpt.seed;
  report["supernet_max_path_macs"] = max_macs;
  report["supernet_params"] = ckpt.state.net.topo().scalar_param_count();
  save_net_file(out_dir / "net.bin", NetFile{ckpt.config_hash, ckpt.seed, net});
  io::write_text_file(out_dir / "arch.txt", arch_listing(net));
  io::write_text_file(out_dir / "report.json", report.dump(2) + "\n");
  out << arch_listing(net) << "supernet max path macs " << max_macs << "\n";
}

void cmd_retrain(const ExperimentConfig& cfg, const fs::path& net_path, std::ostream& out) {
  const Experiment x = prepare_experiment(cfg);
  const NetFile nf = load_net_for(cfg, net_path);
  const std::uint64_t hash = config_hash(cfg);
  out << "retrain: " << cfg.retrain.rounds << " rounds of FedAvg from scratch\n";
  const auto r = retrain_fedavg(nf.net, x.clients, retrain_federation(cfg));
  const auto ev = evaluate(r.net, x.clients, eval_options(cfg));
  json summary = {{"command", "retrain"},
                  {"config_hash", io::hex64(hash)},
                  {"seed", cfg.seed},
                  {"net", net_json(r.net)},
                  {"fed_avg_acc", ev.fed_avg_acc},
                  {"mean_local_acc", ev.mean_local_acc},
                  {"per_client_acc", ev.per_client}};
  save_net_file(cfg.out_dir / "retrained.bin", NetFile{hash, cfg.seed, r.net});
  write_metrics_csv(cfg.out_dir / "retrain_metrics.csv", r.history, hash, cfg.seed);
  io::write_text_file(cfg.out_dir / "retrain_summary.json", summary.dump(2) + "\n");
  out << "fed_avg_acc " << fmt(ev.fed_avg_acc) << " mean_local_acc " << fmt(ev.mean_local_acc) << "\n";
}

void cmd_eval(const ExperimentConfig& cfg, const fs::path& net_path, std::ostream& out) {
  const Experiment x = prepare_experiment(cfg);
  const NetFile nf = load_net_for(cfg, net_path);
  const auto ev = evaluate(nf.net, x.clients, eval_options(cfg));
  out << "fed_avg_acc " << fmt(ev.fed_avg_acc) << "\nmean_local_acc " << fmt(ev.mean_local_acc) << "\n";
  out << "client  test  local_acc\n";
  for (std::size_t i = 0; i < x.clients.size(); ++i) {
    char line[64];
    std::snprintf(line, sizeof line, "%6zu %5zu  %.4f\n", x.clients[i].id, x.clients[i].test.size(), ev.per_client[i]);
    out << line;
  }
  json j = {{"command", "eval"},
            {"config_hash", io::hex64(config_hash(cfg))},
            {"seed", cfg.seed},
            {"fed_avg_acc", ev.fed_avg_acc},
            {"mean_local_acc", ev.mean_local_acc},
            {"per_client_acc", ev.per_client}};
  io::write_text_file(cfg.out_dir / "eval.json", j.dump(2) + "\n");
}

int guarded(const std::function<void()>& fn, std::ostream& err) {
  try {
    fn();
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ArgumentError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace fdnas

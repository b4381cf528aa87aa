// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/harness/config.hpp"

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "fdnas/error.hpp"
#include "fdnas/io/binary.hpp"

namespace fdnas {
namespace {

using nlohmann::json;

// Reads fields of one JSON object and rejects keys nobody asked for.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where_self() + ": expected an object");
  }

  std::string at(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

  const json* find(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void size(const std::string& key, std::size_t& out, std::size_t min = 0) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || v->get<long long>() < 0) throw ConfigError(at(key) + ": expected a non-negative integer");
      out = v->get<std::size_t>();
    }
    if (out < min) throw ConfigError(at(key) + ": must be at least " + std::to_string(min));
  }

  void u64(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || v->get<long long>() < 0) throw ConfigError(at(key) + ": expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void real(const std::string& key, double& out, double lo, double hi, bool lo_open = false, bool hi_open = false) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(at(key) + ": expected a number");
      out = v->get<double>();
    }
    const bool ok = std::isfinite(out) && (lo_open ? out > lo : out >= lo) && (hi_open ? out < hi : out <= hi);
    if (!ok) {
      throw ConfigError(at(key) + ": value " + std::to_string(out) + " outside " + (lo_open ? "(" : "[") +
                        std::to_string(lo) + ", " + std::to_string(hi) + (hi_open ? ")" : "]"));
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(at(key) + ": expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(at(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }

  void path(const std::string& key, std::filesystem::path& out, const std::filesystem::path& base) {
    std::string s;
    string(key, s);
    if (s.empty()) return;
    std::filesystem::path p(s);
    out = p.is_relative() && !base.empty() ? base / p : p;
  }

  void sizes(const std::string& key, std::vector<std::size_t>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(at(key) + ": expected an array of integers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number_integer() || e.get<long long>() < 0) {
          throw ConfigError(at(key) + ": expected an array of non-negative integers");
        }
        out.push_back(e.get<std::size_t>());
      }
    }
  }

  void strings(const std::string& key, std::vector<std::string>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(at(key) + ": expected an array of strings");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) throw ConfigError(at(key) + ": expected an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }

  template <typename F>
  void object(const std::string& key, F&& fn) {
    if (const json* v = find(key)) {
      Fields sub(*v, at(key));
      fn(sub);
      sub.finish();
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError(at(it.key()) + ": unknown field");
    }
  }

 private:
  std::string where_self() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::string rel(const std::filesystem::path& p) { return p.generic_string(); }

}  // namespace

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Fields f(root, "");
  f.u64("seed", c.seed);
  f.size("num_clients", c.num_clients, 1);
  f.size("threads", c.threads, 1);
  f.path("out_dir", c.out_dir, base);
  f.boolean("strict_paper_aggregation", c.strict_paper_aggregation);
  f.path("latency_tables", c.latency_tables, base);

  f.object("data", [&](Fields& d) {
    d.string("source", c.data.source);
    if (c.data.source != "synthetic" && c.data.source != "file") {
      throw ConfigError(d.at("source") + ": expected \"synthetic\" or \"file\"");
    }
    d.path("path", c.data.path, base);
    d.size("num_classes", c.data.synthetic.num_classes, 2);
    d.sizes("example_shape", c.data.synthetic.example_shape);
    if (c.data.synthetic.example_shape.size() != 3) throw ConfigError(d.at("example_shape") + ": expected [channels, height, width]");
    for (auto e : c.data.synthetic.example_shape) {
      if (e == 0) throw ConfigError(d.at("example_shape") + ": extents must be positive");
    }
    d.size("per_class", c.data.synthetic.per_class, 1);
    d.real("difficulty", c.data.synthetic.difficulty, 0.0, 1e6);
  });
  if (c.data.source == "file" && c.data.path.empty()) throw ConfigError("data.path: required when data.source is \"file\"");

  f.object("partition", [&](Fields& p) {
    p.string("scheme", c.partition.scheme);
    if (c.partition.scheme != "label_shards" && c.partition.scheme != "iid" && c.partition.scheme != "groups") {
      throw ConfigError(p.at("scheme") + ": expected \"label_shards\", \"iid\" or \"groups\"");
    }
    p.size("num_groups", c.partition.num_groups, 1);
    p.real("test_fraction", c.partition.split.test, 0.0, 1.0, false, true);
    p.real("val_fraction", c.partition.split.val, 0.0, 1.0, false, true);
    if (const json* g = p.find("groups")) {
      if (!g->is_array()) throw ConfigError(p.at("groups") + ": expected an array");
      for (std::size_t i = 0; i < g->size(); ++i) {
        Fields gf((*g)[i], p.at("groups") + "[" + std::to_string(i) + "]");
        std::vector<std::size_t> cls;
        ShardGroup sg;
        gf.sizes("classes", cls);
        gf.sizes("clients", sg.clients);
        gf.finish();
        for (auto x : cls) sg.classes.push_back(static_cast<Label>(x));
        c.partition.groups.push_back(std::move(sg));
      }
    }
  });
  if (c.partition.scheme == "groups" && c.partition.groups.empty()) {
    throw ConfigError("partition.groups: required when partition.scheme is \"groups\"");
  }

  f.object("search_space", [&](Fields& s) {
    s.size("channels", c.space.channels, 1);
    s.size("num_layers", c.space.num_layers, 1);
    s.sizes("downsample_after", c.space.downsample_after);
    s.strings("candidates", c.space.candidates);
    if (c.space.candidates.size() < 2) throw ConfigError(s.at("candidates") + ": need at least two candidates");
    for (auto d : c.space.downsample_after) {
      if (d >= c.space.num_layers) throw ConfigError(s.at("downsample_after") + ": layer index out of range");
    }
  });
  c.space.input_shape = c.data.synthetic.example_shape;
  c.space.num_classes = c.data.synthetic.num_classes;

  f.object("search", [&](Fields& s) {
    s.size("rounds", c.search.rounds, 0);
    s.size("local_epochs", c.search.local_epochs, 0);
    s.size("batch_size", c.search.batch_size, 1);
    s.real("w_lr", c.search.w_lr, 0.0, 1e3, true);
    s.real("momentum", c.search.sgd.momentum, 0.0, 1.0, false, true);
    s.real("weight_decay", c.search.sgd.weight_decay, 0.0, 1.0);
    s.real("grad_clip", c.search.grad_clip, 0.0, 1e6);
    s.real("alpha_lr", c.search.alpha_lr, 0.0, 1e3);
    s.real("adam_beta1", c.search.adam.beta1, 0.0, 1.0, false, true);
    s.real("adam_beta2", c.search.adam.beta2, 0.0, 1.0, false, true);
    s.real("adam_eps", c.search.adam.eps, 0.0, 1.0, true);
    s.real("latency_weight", c.search.latency_weight, 0.0, 1e6);
    s.string("latency_profile", c.search.latency_profile);
    s.real("participation", c.search.participation, 0.0, 1.0, true);
    s.size("eval_every", c.search.eval_every, 0);
  });
  if (c.search.latency_weight > 0.0 && c.search.latency_profile.empty()) {
    throw ConfigError("search.latency_profile: required when search.latency_weight is positive");
  }
  if (!c.search.latency_profile.empty() && c.latency_tables.empty()) {
    throw ConfigError("latency_tables: required when search.latency_profile is set");
  }

  f.object("cluster", [&](Fields& s) {
    s.path("profiles", c.cluster.profiles, base);
    s.string("key", c.cluster.key);
    if (c.cluster.key != "hardware" && c.cluster.key != "tag") throw ConfigError(s.at("key") + ": expected \"hardware\" or \"tag\"");
    s.size("rounds", c.cluster.rounds, 0);
    s.real("latency_weight", c.cluster.latency_weight, 0.0, 1e6);
    s.boolean("naive", c.cluster.naive);
  });
  if (c.cluster.latency_weight > 0.0 && c.latency_tables.empty()) {
    throw ConfigError("latency_tables: required when cluster.latency_weight is positive");
  }

  f.object("retrain", [&](Fields& s) {
    s.size("rounds", c.retrain.rounds, 0);
    s.size("local_epochs", c.retrain.local_epochs, 0);
    s.size("batch_size", c.retrain.batch_size, 1);
    s.real("lr", c.retrain.lr, 0.0, 1e3, true);
  });
  f.object("eval", [&](Fields& s) {
    s.size("finetune_epochs", c.eval.finetune_epochs, 0);
    s.size("batch_size", c.eval.batch_size, 1);
    s.real("lr", c.eval.lr, 0.0, 1e3, true);
  });
  f.finish();

  if (c.partition.scheme == "label_shards" &&
      (c.partition.num_groups > c.num_clients || c.partition.num_groups > c.data.synthetic.num_classes)) {
    throw ConfigError("partition.num_groups: must not exceed num_clients or data.num_classes");
  }
  try {
    (void)build_search_space(c.space);
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("search_space: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(io::read_text_file(path), path.parent_path());
}

std::string canonical_config(const ExperimentConfig& c) {
  json groups = json::array();
  for (const auto& g : c.partition.groups) groups.push_back({{"classes", g.classes}, {"clients", g.clients}});
  json j = {
      {"num_clients", c.num_clients},
      {"strict_paper_aggregation", c.strict_paper_aggregation},
      {"latency_tables", rel(c.latency_tables.filename())},
      {"data",
       {{"source", c.data.source},
        {"path", rel(c.data.path.filename())},
        {"num_classes", c.data.synthetic.num_classes},
        {"example_shape", c.data.synthetic.example_shape},
        {"per_class", c.data.synthetic.per_class},
        {"difficulty", c.data.synthetic.difficulty}}},
      {"partition",
       {{"scheme", c.partition.scheme},
        {"num_groups", c.partition.num_groups},
        {"groups", groups},
        {"test_fraction", c.partition.split.test},
        {"val_fraction", c.partition.split.val}}},
      {"search_space",
       {{"channels", c.space.channels},
        {"num_layers", c.space.num_layers},
        {"downsample_after", c.space.downsample_after},
        {"candidates", c.space.candidates}}},
      {"search",
       {{"rounds", c.search.rounds},
        {"local_epochs", c.search.local_epochs},
        {"batch_size", c.search.batch_size},
        {"w_lr", c.search.w_lr},
        {"momentum", c.search.sgd.momentum},
        {"weight_decay", c.search.sgd.weight_decay},
        {"grad_clip", c.search.grad_clip},
        {"alpha_lr", c.search.alpha_lr},
        {"adam_beta1", c.search.adam.beta1},
        {"adam_beta2", c.search.adam.beta2},
        {"adam_eps", c.search.adam.eps},
        {"latency_weight", c.search.latency_weight},
        {"latency_profile", c.search.latency_profile},
        {"participation", c.search.participation},
        {"eval_every", c.search.eval_every}}},
      {"cluster",
       {{"profiles", rel(c.cluster.profiles.filename())},
        {"key", c.cluster.key},
        {"rounds", c.cluster.rounds},
        {"latency_weight", c.cluster.latency_weight},
        {"naive", c.cluster.naive}}},
      {"retrain",
       {{"rounds", c.retrain.rounds},
        {"local_epochs", c.retrain.local_epochs},
        {"batch_size", c.retrain.batch_size},
        {"lr", c.retrain.lr}}},
      {"eval", {{"finetune_epochs", c.eval.finetune_epochs}, {"batch_size", c.eval.batch_size}, {"lr", c.eval.lr}}},
  };
  return j.dump();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) { return io::fnv1a64(canonical_config(cfg)); }

FederationConfig search_federation(const ExperimentConfig& c) {
  FederationConfig f;
  f.rounds = c.search.rounds;
  f.local.epochs = c.search.local_epochs;
  f.local.batch_size = c.search.batch_size;
  f.local.w_lr0 = c.search.w_lr;
  f.local.alpha_lr = c.search.alpha_lr;
  f.local.sgd = c.search.sgd;
  f.local.grad_clip = c.search.grad_clip;
  f.local.adam = c.search.adam;
  f.local.latency_weight = c.search.latency_weight;
  f.participation = c.search.participation;
  f.threads = c.threads;
  f.seed = c.seed;
  f.eval_every = c.search.eval_every;
  f.local_eval = eval_options(c);
  return f;
}

FederationConfig retrain_federation(const ExperimentConfig& c) {
  FederationConfig f = search_federation(c);
  f.rounds = c.retrain.rounds;
  f.local.epochs = c.retrain.local_epochs;
  f.local.batch_size = c.retrain.batch_size;
  f.local.w_lr0 = c.retrain.lr;
  f.local.update_alpha = false;
  f.local.latency_weight = 0.0;
  f.eval_every = 0;
  return f;
}

GroupSearchConfig cluster_federation(const ExperimentConfig& c, const std::map<std::string, LatencyTable>* tables) {
  GroupSearchConfig g;
  g.federation = search_federation(c);
  g.federation.local.latency_weight = c.cluster.latency_weight;
  g.federation.eval_every = 0;
  g.latency_tables = tables;
  g.strict_paper_aggregation = c.strict_paper_aggregation;
  return g;
}

EvalOptions eval_options(const ExperimentConfig& c) {
  EvalOptions e;
  e.finetune_epochs = c.eval.finetune_epochs;
  e.batch_size = c.eval.batch_size;
  e.lr = c.eval.lr;
  e.sgd = c.search.sgd;
  e.seed = c.seed;
  e.threads = c.threads;
  return e;
}

Experiment prepare_experiment(const ExperimentConfig& c) {
  Experiment x;
  if (c.data.source == "file") {
    x.dataset = load_dataset(c.data.path);
    if (x.dataset.example_shape != c.data.synthetic.example_shape || x.dataset.num_classes != c.data.synthetic.num_classes) {
      throw ConfigError("data.path: dataset shape or class count disagrees with data.example_shape / data.num_classes");
    }
  } else {
    SyntheticConfig s = c.data.synthetic;
    s.seed = c.seed;
    x.dataset = generate_synthetic(s);
  }
  try {
    if (c.partition.scheme == "iid") {
      x.plan = iid_partition(x.dataset, c.num_clients, c.seed, c.partition.split);
    } else {
      const PartitionScheme scheme =
          c.partition.scheme == "groups"
              ? PartitionScheme{c.partition.groups}
              : PartitionScheme::label_shards(x.dataset.num_classes, c.num_clients, c.partition.num_groups);
      x.plan = partition_noniid(x.dataset, c.num_clients, scheme, c.seed, c.partition.split);
    }
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("partition: ") + e.what());
  }
  x.clients = build_clients(x.dataset, x.plan);
  for (const auto& cl : x.clients) {
    if (cl.train.empty()) throw ConfigError("partition: client " + std::to_string(cl.id) + " received no training data");
  }
  if (!c.cluster.profiles.empty()) {
    apply_profiles(x.clients, load_client_profiles(c.cluster.profiles, c.num_clients));
  }
  x.topology = build_search_space(c.space);
  if (!c.latency_tables.empty()) {
    x.latency_tables = load_latency_tables(c.latency_tables, x.topology->candidate_counts());
  }
  if (!c.search.latency_profile.empty() && !x.latency_tables.count(c.search.latency_profile)) {
    throw ConfigError("search.latency_profile: no table named '" + c.search.latency_profile + "' in " +
                      c.latency_tables.string());
  }
  return x;
}

}  // namespace fdnas

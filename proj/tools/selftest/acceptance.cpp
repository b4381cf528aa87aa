// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "selftest/acceptance.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "fdnas/error.hpp"
#include "fdnas/federation/aggregate.hpp"
#include "fdnas/federation/checkpoint.hpp"
#include "fdnas/federation/evaluate.hpp"
#include "fdnas/federation/metrics.hpp"
#include "fdnas/federation/retrain.hpp"
#include "fdnas/harness/config.hpp"
#include "fdnas/supernet/normal_net.hpp"
#include "selftest/gradcheck.hpp"

namespace fdnas::selftest {
namespace {

// Pinned tolerances and settings.
constexpr std::uint64_t kGradSeed = 2026;
constexpr std::size_t kGradCasesPerFamily = 8;
constexpr double kGradTimeLimitS = 120.0;
constexpr double kAggregationTol = 1e-12;
constexpr std::size_t kAggregationTrials = 25;
constexpr std::size_t kGateDraws = 10000;
constexpr double kGateL1Tol = 0.04;
constexpr std::size_t kGateTrials = 5;
constexpr std::uint64_t kSeeds[] = {1, 2, 3, 4, 5};
constexpr double kMeanLocalAccTarget = 0.90;
constexpr double kPipelineTimeLimitS = 600.0;
constexpr double kLatencyWeight = 0.002;
constexpr double kLargeKernelFactor = 10.0;
constexpr std::size_t kLatencyMinSeeds = 4;
constexpr std::size_t kGroupBudget = 15;
constexpr double kTargetValLoss = 0.05;
constexpr double kSpeedupTarget = 2.0;
constexpr std::size_t kDeterminismRounds = 3;
constexpr std::size_t kDeterminismThreads = 4;

using Clock = std::chrono::steady_clock;

CriterionResult make_result(int id, std::string title) {
  CriterionResult r;
  r.id = id;
  r.title = std::move(title);
  return r;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << v;
  return os.str();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> flatten(const ModelUpdate& u) {
  std::vector<double> out;
  for (const Tensor& t : u.weights.tensors) out.insert(out.end(), t.values().begin(), t.values().end());
  for (const Tensor& t : u.arch.logits) out.insert(out.end(), t.values().begin(), t.values().end());
  return out;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Expected-latency table where every k>=5 candidate costs 10x its k=3 peer.
LatencyTable kernel_penalty_table(const Topology& topo) {
  std::vector<std::vector<double>> ms;
  for (std::size_t l : topo.searchable_layers()) {
    std::vector<double> row;
    for (const OpKind& op : topo.layer(l).def.candidates) {
      double v = 0.0;
      if (std::holds_alternative<Identity>(op)) v = 0.1;
      if (const auto* d = std::get_if<DepthwiseSepConv>(&op)) {
        v = d->expansion == 1 ? 1.0 : 2.0;
        if (d->kernel >= 5) v *= kLargeKernelFactor;
      }
      row.push_back(v);
    }
    ms.push_back(std::move(row));
  }
  return LatencyTable("kernel_penalty", std::move(ms));
}

struct SeedRun {
  ExperimentConfig cfg;
  Experiment exp;
  RunResult search;
  double search_seconds = 0.0;
};

/// Desk-scale searches shared by criteria 5 to 7, computed on first use.
class DeskRuns {
 public:
  explicit DeskRuns(std::size_t threads) : threads_(threads) {}

  ExperimentConfig config(std::uint64_t seed) const {
    ExperimentConfig cfg;
    cfg.seed = seed;
    cfg.threads = threads_;
    return cfg;
  }

  const SeedRun& get(std::uint64_t seed) {
    auto it = runs_.find(seed);
    if (it != runs_.end()) return it->second;
    const auto t0 = Clock::now();
    SeedRun r;
    r.cfg = config(seed);
    r.exp = prepare_experiment(r.cfg);
    r.search = run_fdnas(r.exp.topology, r.exp.clients, search_federation(r.cfg));
    r.search_seconds = seconds_since(t0);
    return runs_.emplace(seed, std::move(r)).first->second;
  }

 private:
  std::size_t threads_;
  std::map<std::uint64_t, SeedRun> runs_;
};

CriterionResult criterion_gradients() {
  CriterionResult r = make_result(1, "gradient oracles");
  const auto t0 = Clock::now();
  const auto reports = run_gradient_suite(kGradSeed, kGradCasesPerFamily);
  r.seconds = seconds_since(t0);
  std::size_t cases = 0;
  bool all = true;
  for (const FamilyReport& f : reports) {
    cases += f.cases;
    all = all && f.pass();
    r.detail.push_back(f.family + ": " + std::to_string(f.cases) + " cases, " + std::to_string(f.coords) +
                       " coords, " + std::to_string(f.skipped) + " kink skips, max rel err " + sci(f.max_error) +
                       " (tol " + sci(f.tolerance) + ")" + (f.pass() ? "" : " FAILED"));
  }
  r.pass = all && cases >= 100 && r.seconds < kGradTimeLimitS;
  r.summary = std::to_string(cases) + " cases in " + fmt(r.seconds, 3) + " s";
  return r;
}

CriterionResult criterion_aggregation() {
  CriterionResult r = make_result(2, "aggregation algebra");
  const auto t0 = Clock::now();
  Rng rng(derive_seed(kGradSeed, {2}));
  SearchSpaceConfig space;
  space.num_layers = 3;
  const auto topo = build_search_space(space);
  double identity_err = 0.0, order_err = 0.0, scale_err = 0.0, hull_excess = 0.0;
  for (std::size_t trial = 0; trial < kAggregationTrials; ++trial) {
    const std::size_t k = 1 + rng.below(6);
    std::vector<ModelUpdate> ups;
    std::vector<double> sizes;
    for (std::size_t c = 0; c < k; ++c) {
      ModelUpdate u{init_params(*topo, rng.next()), uniform_arch(*topo)};
      for (Tensor& t : u.arch.logits) {
        for (double& v : t.values()) v = 3.0 * rng.normal();
      }
      ups.push_back(std::move(u));
      sizes.push_back(static_cast<double>(1 + rng.below(500)));
    }
    const auto base = flatten(aggregate(ups, sizes));

    identity_err = std::max(identity_err, max_abs_diff(flatten(aggregate(std::span(ups).first(1),
                                                                         std::span(sizes).first(1))),
                                                       flatten(ups[0])));

    std::vector<std::size_t> perm(k);
    for (std::size_t i = 0; i < k; ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<ModelUpdate> ups_p;
    std::vector<double> sizes_p;
    for (std::size_t i : perm) {
      ups_p.push_back(ups[i]);
      sizes_p.push_back(sizes[i]);
    }
    order_err = std::max(order_err, max_abs_diff(flatten(aggregate(ups_p, sizes_p)), base));

    const double c = 0.01 + 100.0 * rng.uniform();
    std::vector<double> scaled = sizes;
    for (double& s : scaled) s *= c;
    scale_err = std::max(scale_err, max_abs_diff(flatten(aggregate(ups, scaled)), base));

    std::vector<std::vector<double>> flat;
    for (const ModelUpdate& u : ups) flat.push_back(flatten(u));
    for (std::size_t i = 0; i < base.size(); ++i) {
      double lo = flat[0][i], hi = flat[0][i];
      for (const auto& f : flat) {
        lo = std::min(lo, f[i]);
        hi = std::max(hi, f[i]);
      }
      hull_excess = std::max({hull_excess, lo - base[i], base[i] - hi});
    }
  }
  r.seconds = seconds_since(t0);
  r.detail.push_back("single-client identity max |diff| " + sci(identity_err));
  r.detail.push_back("order invariance max |diff| " + sci(order_err));
  r.detail.push_back("common-scale invariance max |diff| " + sci(scale_err));
  r.detail.push_back("convex-hull max excess " + sci(hull_excess));
  const double worst = std::max({identity_err, order_err, scale_err, hull_excess});
  r.pass = worst <= kAggregationTol;
  r.summary = std::to_string(kAggregationTrials) + " randomized trials, worst " + sci(worst) + " (tol " +
              sci(kAggregationTol) + ")";
  return r;
}

CriterionResult criterion_gates() {
  CriterionResult r = make_result(3, "gate statistics");
  const auto t0 = Clock::now();
  Rng rng(derive_seed(kGradSeed, {3}));
  double worst_l1 = 0.0;
  for (std::size_t trial = 0; trial < kGateTrials; ++trial) {
    ArchParams arch{{Tensor({4})}};
    for (double& v : arch.logits[0].values()) v = 1.5 * rng.normal();
    const auto p = softmax_probs(arch.logits[0].values());
    std::vector<double> freq(4, 0.0);
    for (std::size_t d = 0; d < kGateDraws; ++d) freq[sample_gates(arch, rng).choices[0]] += 1.0;
    double l1 = 0.0;
    for (std::size_t i = 0; i < 4; ++i) l1 += std::abs(freq[i] / kGateDraws - p[i]);
    worst_l1 = std::max(worst_l1, l1);
    r.detail.push_back("trial " + std::to_string(trial) + ": L1 " + fmt(l1));
  }
  bool one_hot_exact = true;
  for (std::size_t hot = 0; hot < 4; ++hot) {
    ArchParams arch{{Tensor({4}, -1000.0)}};
    arch.logits[0][hot] = 0.0;
    for (std::size_t d = 0; d < kGateDraws; ++d) one_hot_exact = one_hot_exact && sample_gates(arch, rng).choices[0] == hot;
  }
  r.detail.push_back(std::string("one-hot logits: ") + (one_hot_exact ? "every draw on the hot candidate" : "MISS"));
  r.seconds = seconds_since(t0);
  r.pass = worst_l1 < kGateL1Tol && one_hot_exact;
  r.summary = std::to_string(kGateTrials) + "x" + std::to_string(kGateDraws) + " draws, worst L1 " + fmt(worst_l1) +
              " (tol " + fmt(kGateL1Tol) + ")";
  return r;
}

CriterionResult criterion_bilevel(DeskRuns& desk) {
  CriterionResult r = make_result(4, "bilevel separation");
  const auto t0 = Clock::now();
  ExperimentConfig cfg = desk.config(kSeeds[0]);
  const Experiment x = prepare_experiment(cfg);
  FederationConfig f = search_federation(cfg);
  f.local.audit = true;
  std::size_t train_steps = 0, val_steps = 0, w_moves = 0, a_moves = 0, violations = 0;
  const StepObserver observer = [&](const StepRecord& s) {
    if (s.split == BatchSplit::kTrain) {
      ++train_steps;
      w_moves += s.weights_changed;
      violations += s.arch_changed;
    } else {
      ++val_steps;
      a_moves += s.arch_changed;
      violations += s.weights_changed;
    }
  };
  run_fdnas(x.topology, x.clients, f, &observer);
  r.seconds = seconds_since(t0);
  r.detail.push_back("train-batch steps " + std::to_string(train_steps) + " (" + std::to_string(w_moves) +
                     " moved weights)");
  r.detail.push_back("val-batch steps " + std::to_string(val_steps) + " (" + std::to_string(a_moves) +
                     " moved logits)");
  r.pass = violations == 0 && train_steps > 0 && val_steps > 0 && w_moves > 0 && a_moves > 0;
  r.summary = std::to_string(violations) + " cross-updates over " + std::to_string(f.rounds) + " rounds";
  return r;
}

CriterionResult criterion_end_to_end(DeskRuns& desk) {
  CriterionResult r = make_result(5, "end-to-end desk FDNAS");
  double total = 0.0;
  std::vector<double> accs;
  for (std::uint64_t seed : kSeeds) {
    const SeedRun& run = desk.get(seed);
    const auto t0 = Clock::now();
    const NormalNet derived = derive_normal_net(run.search.state.net, run.search.state.arch);
    const RetrainResult re = retrain_fedavg(derived, run.exp.clients, retrain_federation(run.cfg));
    const EvalResult ev = evaluate(re.net, run.exp.clients, eval_options(run.cfg));
    const double seconds = run.search_seconds + seconds_since(t0);
    total += seconds;
    accs.push_back(ev.mean_local_acc);
    std::string arch;
    for (const auto& n : derived.layer_names()) arch += (arch.empty() ? "" : " ") + n;
    r.detail.push_back("seed " + std::to_string(seed) + ": mean local acc " + fmt(ev.mean_local_acc) +
                       ", fed-avg acc " + fmt(ev.fed_avg_acc) + ", " + fmt(seconds, 3) + " s, [" + arch + "]");
  }
  r.seconds = total;
  const double med = median(accs);
  r.pass = med >= kMeanLocalAccTarget && total < kPipelineTimeLimitS;
  r.summary = "median mean local acc " + fmt(med) + " (target " + fmt(kMeanLocalAccTarget) + "), " +
              fmt(total, 3) + " s";
  return r;
}

CriterionResult criterion_latency(DeskRuns& desk) {
  CriterionResult r = make_result(6, "latency pressure");
  const auto t0 = Clock::now();
  std::size_t ok = 0;
  for (std::uint64_t seed : kSeeds) {
    const SeedRun& run = desk.get(seed);
    const LatencyTable table = kernel_penalty_table(*run.exp.topology);
    FederationConfig f = search_federation(run.cfg);
    f.local.latency = &table;
    f.local.latency_weight = kLatencyWeight;
    const RunResult pressured = run_fdnas(run.exp.topology, run.exp.clients, f);
    const double base = choice_latency(table, argmax_choices(run.search.state.arch));
    const double lat = choice_latency(table, argmax_choices(pressured.state.arch));
    ok += lat <= base;
    r.detail.push_back("seed " + std::to_string(seed) + ": lambda 0 -> " + fmt(base) + " ms, lambda " +
                       fmt(kLatencyWeight) + " -> " + fmt(lat) + " ms");
  }
  r.seconds = seconds_since(t0);
  r.pass = ok >= kLatencyMinSeeds;
  r.summary = std::to_string(ok) + "/" + std::to_string(std::size(kSeeds)) + " seeds with no latency increase (need " +
              std::to_string(kLatencyMinSeeds) + ")";
  return r;
}

bool same_net(const NormalNet& a, const NormalNet& b) {
  return *a.topology == *b.topology && a.weights == b.weights && a.choices == b.choices;
}

CriterionResult criterion_inheritance(DeskRuns& desk) {
  CriterionResult r = make_result(7, "CFDNAS inheritance speedup");
  const auto t0 = Clock::now();
  std::vector<double> ratios;
  bool budget_zero_exact = true;
  for (std::uint64_t seed : kSeeds) {
    const SeedRun& run = desk.get(seed);
    std::vector<ClientData> clients = run.exp.clients;
    for (ClientData& c : clients) c.hardware = c.id < clients.size() / 2 ? "gpu" : "cpu";
    GroupSearchConfig g = cluster_federation(run.cfg, nullptr);
    g.federation.local.latency_weight = 0.0;

    const ClusterSpec zero = split_clusters(clients, ClusterKey::kHardware, 0);
    const NormalNet fdnas_net = derive_normal_net(run.search.state.net, run.search.state.arch);
    for (const GroupResult& gr : run_cfdnas(run.search.state, zero, clients, g)) {
      budget_zero_exact = budget_zero_exact && same_net(gr.derived, fdnas_net);
    }

    const ClusterSpec spec = split_clusters(clients, ClusterKey::kHardware, kGroupBudget);
    const auto inherited = run_cfdnas(run.search.state, spec, clients, g);
    const auto naive = naive_group_search(run.exp.topology, spec, clients, g);
    double sum_inh = 0.0, sum_naive = 0.0;
    std::string per_group;
    for (std::size_t k = 0; k < spec.groups.size(); ++k) {
      const auto ri = rounds_to_target(inherited[k].history, kTargetValLoss);
      const auto rn = rounds_to_target(naive[k].history, kTargetValLoss);
      sum_inh += static_cast<double>(ri);
      sum_naive += static_cast<double>(rn);
      per_group += " " + spec.groups[k].key + " " + std::to_string(rn) + "/" + std::to_string(ri);
    }
    ratios.push_back(sum_naive / sum_inh);
    r.detail.push_back("seed " + std::to_string(seed) + ": naive/inherited rounds" + per_group + ", ratio " +
                       fmt(ratios.back()));
  }
  r.seconds = seconds_since(t0);
  const double med = median(ratios);
  r.detail.push_back(std::string("budget 0 derivation ") + (budget_zero_exact ? "identical to" : "DIFFERS from") +
                     " the inherited FDNAS derivation");
  r.pass = med >= kSpeedupTarget && budget_zero_exact;
  r.summary = "median ratio " + fmt(med) + " (target " + fmt(kSpeedupTarget) + ", val loss target " +
              fmt(kTargetValLoss) + ", budget " + std::to_string(kGroupBudget) + ")";
  return r;
}

CriterionResult criterion_determinism() {
  CriterionResult r = make_result(8, "determinism and serialization");
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.seed = 11;
  cfg.search.rounds = kDeterminismRounds;
  cfg.search.eval_every = 1;
  const auto run_with = [&cfg](std::size_t threads) {
    ExperimentConfig c = cfg;
    c.threads = threads;
    const Experiment x = prepare_experiment(c);
    FederationConfig f = search_federation(c);
    f.eval_local = true;
    RunResult run = run_fdnas(x.topology, x.clients, f);
    return std::pair{encode_checkpoint({config_hash(c), c.seed, run.state}), std::move(run.history)};
  };
  const auto [bytes_a, hist_a] = run_with(1);
  const auto [bytes_b, hist_b] = run_with(1);
  const auto [bytes_t, hist_t] = run_with(kDeterminismThreads);
  const bool rerun = bytes_a == bytes_b && same_trajectory(hist_a, hist_b);
  const bool roundtrip = encode_checkpoint(decode_checkpoint(bytes_a)) == bytes_a;
  const bool concurrent = bytes_a == bytes_t && same_trajectory(hist_a, hist_t);
  r.seconds = seconds_since(t0);
  r.detail.push_back(std::string("same seed rerun: ") + (rerun ? "byte-identical" : "DIFFERS"));
  r.detail.push_back(std::string("checkpoint decode/encode: ") + (roundtrip ? "byte-identical" : "DIFFERS"));
  r.detail.push_back("threads " + std::to_string(kDeterminismThreads) + " vs 1: " +
                     (concurrent ? "identical checkpoint and metrics" : "DIFFERS"));
  r.pass = rerun && roundtrip && concurrent;
  r.summary = std::to_string(bytes_a.size()) + "-byte checkpoint after " + std::to_string(kDeterminismRounds) +
              " rounds";
  return r;
}

std::set<Label> labels_of(const LabeledDataset& ds, const ClientShards& s) {
  std::set<Label> out;
  for (const auto* part : {&s.train, &s.val, &s.test}) {
    for (std::size_t i : *part) out.insert(ds.labels[i]);
  }
  return out;
}

CriterionResult criterion_partition() {
  CriterionResult r = make_result(9, "partition properties");
  const auto t0 = Clock::now();
  bool supports = true, covers = true, splits = true;
  std::size_t plans = 0;
  const auto check_plan = [&](const ShardPlan& plan) {
    ++plans;
    plan.validate();
    covers = covers && plan.covers_dataset();
    for (const ClientShards& c : plan.clients) {
      const double pool = static_cast<double>(c.train.size() + c.val.size());
      splits = splits && std::abs(static_cast<double>(c.val.size()) - 0.1 * pool) <= 1.0;
    }
  };
  for (std::uint64_t seed : kSeeds) {
    SyntheticConfig sc;
    sc.num_classes = 10;
    sc.per_class = 60;
    sc.seed = seed;
    const LabeledDataset ds10 = generate_synthetic(sc);
    const PartitionScheme scheme = PartitionScheme::cifar10_three_groups();
    const ShardPlan plan = partition_noniid(ds10, 10, scheme, seed);
    check_plan(plan);
    for (const ShardGroup& g : scheme.groups) {
      const std::set<Label> want(g.classes.begin(), g.classes.end());
      std::set<Label> got;
      for (std::size_t c : g.clients) {
        const auto mine = labels_of(ds10, plan.clients[c]);
        supports = supports && std::includes(want.begin(), want.end(), mine.begin(), mine.end());
        got.insert(mine.begin(), mine.end());
      }
      supports = supports && got == want;
    }

    sc.num_classes = 6;
    sc.per_class = 120;
    const LabeledDataset ds6 = generate_synthetic(sc);
    check_plan(partition_noniid(ds6, 6, PartitionScheme::label_shards(6, 6, 3), seed));
    check_plan(iid_partition(ds6, 6, seed));
  }
  r.seconds = seconds_since(t0);
  r.detail.push_back(std::string("10-client/10-class group label supports: ") + (supports ? "exact" : "WRONG"));
  r.detail.push_back(std::string("disjoint covers: ") + (covers ? "all" : "VIOLATED"));
  r.detail.push_back(std::string("val = 0.1 of train+val within 1 example: ") + (splits ? "all clients" : "VIOLATED"));
  r.pass = supports && covers && splits;
  r.summary = std::to_string(plans) + " shard plans checked";
  return r;
}

}  // namespace

std::vector<int> parse_selection(std::string_view only) {
  std::vector<int> ids;
  if (only.empty()) {
    for (int i = 1; i <= 9; ++i) ids.push_back(i);
    return ids;
  }
  std::size_t pos = 0;
  while (pos <= only.size()) {
    const std::size_t end = std::min(only.find(',', pos), only.size());
    const std::string_view item = only.substr(pos, end - pos);
    int id = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), id);
    if (ec != std::errc{} || ptr != item.data() + item.size() || id < 1 || id > 9) {
      throw ArgumentError("--only: expected comma-separated criterion numbers 1-9, got '" + std::string(item) + "'");
    }
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
    pos = end + 1;
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

int run_acceptance(std::string_view only, std::size_t threads, std::ostream& out) {
  const auto ids = parse_selection(only);
  DeskRuns desk(std::max<std::size_t>(threads, 1));
  const std::map<int, std::function<CriterionResult()>> criteria{
      {1, criterion_gradients},
      {2, criterion_aggregation},
      {3, criterion_gates},
      {4, [&] { return criterion_bilevel(desk); }},
      {5, [&] { return criterion_end_to_end(desk); }},
      {6, [&] { return criterion_latency(desk); }},
      {7, [&] { return criterion_inheritance(desk); }},
      {8, criterion_determinism},
      {9, criterion_partition},
  };
  std::size_t passed = 0;
  for (int id : ids) {
    const CriterionResult r = criteria.at(id)();
    passed += r.pass;
    out << (r.pass ? "PASS" : "FAIL") << " criterion " << r.id << " (" << r.title << "): " << r.summary << '\n';
    for (const auto& line : r.detail) out << "    " << line << '\n';
    out.flush();
  }
  out << passed << "/" << ids.size() << " criteria passed\n";
  return passed == ids.size() ? 0 : kExitAcceptanceFailed;
}

}  // namespace fdnas::selftest

#pragma once

// Command-line front end. Every subcommand writes plain CSV (or JSON for the
// replay/generator commands) so runs can be appended to and plotted later.
//
// Exit status: 0 ok, 1 runtime failure, 2 bad usage, 3 invalid config or
// topology, 4 instance too large for an exhaustive routine.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "qroute/analytic.hpp"
#include "qroute/errors.hpp"
#include "qroute/io.hpp"
#include "qroute/montecarlo.hpp"
#include "qroute/oracle.hpp"
#include "qroute/routing.hpp"
#include "qroute/topology.hpp"

namespace qroute::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kInvalidInput = 3, kSizeLimit = 4 };

inline constexpr const char* kThreadsEnv = "QROUTE_THREADS";
inline constexpr std::string_view kEnumerateCsvHeader = "p,q,k,snapshots,exact_rate,greedy_rate,dynamic_rate";
inline constexpr std::string_view kPerSnapshotCsvHeader = "p,k,snapshot,probability,links,exact,greedy,dynamic";
inline constexpr std::string_view kSingleSnapshotCsvHeader = "links,exact,greedy,dynamic";

namespace detail {

using nlohmann::json;

inline std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return std::string(s);
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  for (std::size_t pos; (pos = s.find(sep)) != std::string_view::npos; s.remove_prefix(pos + 1))
    out.push_back(trim(s.substr(0, pos)));
  out.push_back(trim(s));
  return out;
}

inline double parse_real(const std::string& s, std::string_view what, bool allow_inf) {
  if (allow_inf && s == "inf") return kInfiniteLifetime;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || !std::isfinite(v))
    throw UsageError(fmt::format("invalid value '{}' for {}", s, what));
  return v;
}

inline int parse_int(const std::string& s, std::string_view what) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw UsageError(fmt::format("invalid integer '{}' for {}", s, what));
  return static_cast<int>(v);
}

inline std::vector<double> parse_reals(std::string_view s, std::string_view what, bool allow_inf = false) {
  std::vector<double> out;
  for (const std::string& item : split(s, ',')) out.push_back(parse_real(item, what, allow_inf));
  return out;
}

inline std::vector<double> parse_probabilities(std::string_view s, std::string_view what) {
  auto out = parse_reals(s, what);
  for (double v : out)
    if (!(v >= 0.0 && v <= 1.0)) throw UsageError(fmt::format("{} must lie in [0,1]", what));
  return out;
}

// "lo..hi", "lo..hi:step" or a comma list.
inline std::vector<int> parse_ints(std::string_view s, std::string_view what) {
  std::vector<int> out;
  const auto dots = s.find("..");
  if (dots == std::string_view::npos) {
    for (const std::string& item : split(s, ',')) out.push_back(parse_int(item, what));
    return out;
  }
  const int lo = parse_int(trim(s.substr(0, dots)), what);
  std::string_view rest = s.substr(dots + 2);
  int step = 1;
  if (const auto colon = rest.find(':'); colon != std::string_view::npos) {
    step = parse_int(trim(rest.substr(colon + 1)), what);
    rest = rest.substr(0, colon);
  }
  const int hi = parse_int(trim(rest), what);
  if (step < 1 || hi < lo) throw UsageError(fmt::format("invalid range '{}' for {}", s, what));
  if ((static_cast<long>(hi) - lo) / step >= static_cast<long>(ExperimentConfig::kMaxCombinations))
    throw SizeLimitError(fmt::format("range '{}' for {} is too long", s, what));
  for (long v = lo; v <= hi; v += step) out.push_back(static_cast<int>(v));
  return out;
}

inline std::vector<std::optional<double>> parse_q_list(std::string_view s) {
  std::vector<std::optional<double>> out;
  for (const std::string& item : split(s, ',')) {
    if (item == "topology") {
      out.emplace_back(std::nullopt);
      continue;
    }
    const double v = parse_real(item, "q", false);
    if (!(v >= 0.0 && v <= 1.0)) throw UsageError("q must lie in [0,1]");
    out.emplace_back(v);
  }
  return out;
}

// Config values may be numbers, strings in flag syntax, or arrays of either.
inline std::string config_text(const json& j, const std::string& key) {
  auto scalar = [&](const json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return format_number(v.get<double>());
    throw ParseError(key, "expected a number, a string or an array of them");
  };
  if (!j.is_array()) return scalar(j);
  if (j.empty()) throw ParseError(key, "list must be nonempty");
  std::string out;
  for (const json& v : j) out += (out.empty() ? "" : ",") + scalar(v);
  return out;
}

inline std::string read_file(const std::string& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError(fmt::format("cannot open {} '{}'", what, path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Topology load_topology(const std::string& ref) {
  try {
    return io::resolve_topology(ref);
  } catch (const InvariantError& e) {
    throw ParseError("topology '" + ref + "'", e.what());
  }
}

inline MetricKind resolve_metric(const std::string& name, const Topology& topo) {
  if (name == "auto") return topo.embedded() ? MetricKind::euclidean : MetricKind::hop;
  const MetricKind m = parse_metric(name);
  if (m != MetricKind::hop && !topo.embedded())
    throw UsageError(fmt::format("{} metric needs a topology with coordinates", to_string(m)));
  return m;
}

// Writes CSV rows either to a stream (with header) or appended to a file.
// An existing file must carry the same header.
class CsvSink {
 public:
  CsvSink(const std::string& path, std::string_view header, std::ostream& fallback) : stream_(&fallback) {
    if (path.empty()) {
      *stream_ << header << '\n';
      return;
    }
    bool need_header = true;
    {
      std::ifstream existing(path);
      std::string first;
      if (existing && std::getline(existing, first)) {
        if (first != header)
          throw UsageError(fmt::format("'{}' has a different CSV header; refusing to append", path));
        need_header = false;
      }
    }
    file_.open(path, std::ios::app | std::ios::binary);
    if (!file_) throw UsageError(fmt::format("cannot open '{}' for writing", path));
    stream_ = &file_;
    if (need_header) *stream_ << header << '\n';
  }

  void row(const std::string& line) { *stream_ << line << '\n'; }

  ~CsvSink() { stream_->flush(); }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

inline unsigned default_threads() {
  if (const char* env = std::getenv(kThreadsEnv)) {
    const int n = parse_int(env, kThreadsEnv);
    if (n < 1) throw UsageError(std::string(kThreadsEnv) + " must be a positive integer");
    return static_cast<unsigned>(n);
  }
  return 1;
}

// Raw flag text shared by the Monte Carlo subcommands. Empty strings mean the
// flag was not given.
struct ExperimentFlags {
  std::string config;
  std::string topology;
  std::string protocol;
  std::string metric;
  std::string mode;
  std::string p;
  std::string q;
  std::string k;
  std::string mu;
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
  int threads = 0;
  bool straight_path = true;
  bool single_success = false;
  bool checked = false;
  std::string out;

  CLI::Option* trials_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* straight_opt = nullptr;
  CLI::Option* single_opt = nullptr;

  void add_to(CLI::App& app) {
    app.add_option("--config", config, "JSON experiment config; flags override its values");
    app.add_option("--topology", topology, "grid21, grid:W,H:ax,ay:bx,by, a built-in six-node name, or a file");
    app.add_option("--protocol", protocol, "dynamic or static");
    app.add_option("--metric", metric, "euclidean, hop, manhattan or auto");
    app.add_option("--mode", mode, "decoherence mode: per_qubit or per_link");
    app.add_option("--p", p, "link success probability (comma list)");
    app.add_option("--q", q, "uniform swap probability (comma list, or 'topology')");
    app.add_option("--k", k, "slots per block: N, lo..hi[:step] or comma list");
    app.add_option("--mu", mu, "mean memory lifetime in slots (comma list, 'inf')");
    trials_opt = app.add_option("--trials", trials, "Monte Carlo trials per point");
    seed_opt = app.add_option("--seed", seed, "master seed");
    threads_opt = app.add_option("--threads", threads, "worker threads (default from QROUTE_THREADS, else 1)");
    straight_opt = app.add_flag("--straight-path,!--no-straight-path", straight_path, "straight-path tie rule");
    single_opt = app.add_flag("--single-success", single_success, "keep only the newest link per edge");
    app.add_flag("--checked", checked, "assert per-trial invariants");
    app.add_option("--out", out, "append CSV rows to this file instead of stdout");
  }
};

struct Experiment {
  Topology topology = io::six_node_base();
  ExperimentConfig config;
  int k_max = 10;
};

inline Experiment build_experiment(const ExperimentFlags& f) {
  std::string topology = "grid21", protocol, metric = "auto", mode, p, q, k, mu;
  std::optional<std::int64_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads, k_max;
  std::optional<bool> straight, single;

  if (!f.config.empty()) {
    const json doc = io::detail::parse_document(read_file(f.config, "config"));
    io::detail::check_format(doc);
    for (const auto& [key, value] : doc.items()) {
      if (key == "format") continue;
      auto text = [&] { return config_text(value, key); };
      auto integer = [&]() -> std::int64_t {
        if (!value.is_number_integer()) throw ParseError(key, "expected an integer");
        return value.get<std::int64_t>();
      };
      auto boolean = [&] {
        if (!value.is_boolean()) throw ParseError(key, "expected true or false");
        return value.get<bool>();
      };
      auto string = [&] {
        if (!value.is_string()) throw ParseError(key, "expected a string");
        return value.get<std::string>();
      };
      if (key == "topology") topology = string();
      else if (key == "protocol") protocol = string();
      else if (key == "metric") metric = string();
      else if (key == "mode") mode = string();
      else if (key == "p") p = text();
      else if (key == "q") q = text();
      else if (key == "k") k = text();
      else if (key == "mu") mu = text();
      else if (key == "trials") trials = integer();
      else if (key == "seed") {
        if (!value.is_number_unsigned()) throw ParseError(key, "expected a nonnegative integer");
        seed = value.get<std::uint64_t>();
      } else if (key == "threads") threads = static_cast<int>(integer());
      else if (key == "k_max") k_max = static_cast<int>(integer());
      else if (key == "straight_path") straight = boolean();
      else if (key == "single_success") single = boolean();
      else throw ParseError(key, "unknown config key");
    }
  }

  auto take = [](std::string& dst, const std::string& flag) {
    if (!flag.empty()) dst = flag;
  };
  take(topology, f.topology);
  take(protocol, f.protocol);
  take(metric, f.metric);
  take(mode, f.mode);
  take(p, f.p);
  take(q, f.q);
  take(k, f.k);
  take(mu, f.mu);
  if (f.trials_opt && f.trials_opt->count()) trials = f.trials;
  if (f.seed_opt && f.seed_opt->count()) seed = f.seed;
  if (f.threads_opt && f.threads_opt->count()) threads = f.threads;
  if (f.straight_opt && f.straight_opt->count()) straight = f.straight_path;
  if (f.single_opt && f.single_opt->count()) single = f.single_success;

  Experiment ex;
  ex.topology = load_topology(topology);
  ExperimentConfig& c = ex.config;
  if (!protocol.empty()) c.settings.protocol = parse_protocol(protocol);
  c.settings.metric = resolve_metric(metric, ex.topology);
  if (!mode.empty()) c.settings.mode = parse_decoherence_mode(mode);
  if (straight) c.settings.straight_path = *straight;
  if (single) c.settings.single_success = *single;
  if (!p.empty()) c.p = parse_probabilities(p, "p");
  if (!q.empty()) c.q = parse_q_list(q);
  if (!k.empty()) c.k = parse_ints(k, "k");
  if (!mu.empty()) c.mu = parse_reals(mu, "mu", true);
  for (int kv : c.k)
    if (kv < 1) throw UsageError("k must be a positive integer");
  for (double m : c.mu)
    if (!(m > 0.0)) throw UsageError("mu must be positive or inf");
  if (trials) c.run.trials = *trials;
  if (c.run.trials < 1) throw UsageError("trials must be at least 1");
  if (seed) c.run.seed = *seed;
  c.run.threads = default_threads();
  if (threads) {
    if (*threads < 1) throw UsageError("threads must be a positive integer");
    c.run.threads = static_cast<unsigned>(*threads);
  }
  c.run.checked = f.checked;
  if (k_max) ex.k_max = *k_max;
  return ex;
}

inline ScalarConfig scalar_config(const ExperimentConfig& c, std::string_view command) {
  if (c.p.size() != 1 || c.q.size() != 1 || c.k.size() != 1 || c.mu.size() != 1)
    throw UsageError(fmt::format("{} takes scalar parameters; use sweep for lists", command));
  return {c.settings, {c.p[0], c.q[0], c.k[0], c.mu[0]}, c.run};
}

// Per-snapshot local yield under the chosen dynamic settings.
struct LocalEvaluator {
  const Topology& topo;
  ConsumerDistances dist;
  bool straight_path;

  double operator()(const Snapshot& s) const {
    return snapshot_yield(trace_chains(dynamic_internal_phase(s, topo, dist, straight_path), s, topo), topo);
  }
};

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entanglement routing simulator for time-multiplexed repeater networks", "qroute"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  detail::ExperimentFlags sim_flags, sweep_flags, kopt_flags, explain_flags;
  auto* simulate = app.add_subcommand("simulate", "estimate one rate R(k)");
  sim_flags.add_to(*simulate);
  auto* sweep_cmd = app.add_subcommand("sweep", "estimate rates over a grid of at most two swept parameters");
  sweep_flags.add_to(*sweep_cmd);
  auto* kopt = app.add_subcommand("kopt", "find the block length k maximising the rate");
  kopt_flags.add_to(*kopt);
  int k_max = 0;
  auto* k_max_opt = kopt->add_option("--k-max", k_max, "largest k tried (default 10)");
  auto* explain = app.add_subcommand("explain-snapshot", "replay one seeded trial and dump it as JSON");
  explain_flags.add_to(*explain);
  std::int64_t trial_index = 0;
  std::uint64_t combination = 0;
  explain->add_option("--trial", trial_index, "trial index to replay (default 0)");
  explain->add_option("--combination", combination, "sweep combination index (default 0)");

  auto* oracle = app.add_subcommand("oracle", "global-knowledge capacities");
  std::string o_topology = "sixnode-base", o_p = "1", o_q, o_k = "1", o_metric = "auto", o_snapshot, o_out;
  bool o_enumerate = false, o_per_snapshot = false, o_straight = true;
  std::size_t o_limit = kDefaultOracleLinkLimit;
  oracle->add_option("--topology", o_topology, "topology reference (default sixnode-base)");
  oracle->add_option("--p", o_p, "link success probability (comma list)");
  oracle->add_option("--q", o_q, "uniform swap probability (comma list); default keeps topology values");
  oracle->add_option("--k", o_k, "slots per block: N, lo..hi[:step] or comma list");
  oracle->add_option("--metric", o_metric, "metric for the dynamic column");
  oracle->add_flag("--straight-path,!--no-straight-path", o_straight, "straight-path tie rule for the dynamic column");
  oracle->add_option("--max-links", o_limit, "size guard on link slots / surviving links (default 24, at most 64)");
  oracle->add_option("--out", o_out, "append CSV rows to this file instead of stdout");
  auto* o_enum_opt = oracle->add_flag("--enumerate", o_enumerate, "exact expected rates over all snapshots");
  auto* o_per_opt = oracle->add_flag("--per-snapshot", o_per_snapshot, "one CSV row per enumerated snapshot");
  auto* o_snap_opt = oracle->add_option("--snapshot", o_snapshot, "capacities of one snapshot file");
  o_enum_opt->excludes(o_per_opt)->excludes(o_snap_opt);
  o_per_opt->excludes(o_snap_opt);

  auto* analytic = app.add_subcommand("analytic", "closed-form values");
  bool a_peff = false, a_bound = false, a_chain = false;
  std::string a_topology = "grid21", a_p = "1", a_q = "1", a_k = "1", a_mu = "inf", a_d = "1", a_mode = "per_link";
  auto* a_peff_opt = analytic->add_flag("--peff", a_peff, "probability of at least one link after k slots");
  auto* a_bound_opt = analytic->add_flag("--bound", a_bound, "large-k rate bound of a topology");
  auto* a_chain_opt = analytic->add_flag("--chain", a_chain, "exact rate of a d-edge chain at p = 1");
  a_peff_opt->excludes(a_bound_opt)->excludes(a_chain_opt);
  a_bound_opt->excludes(a_chain_opt);
  analytic->add_option("--topology", a_topology, "topology for --bound (default grid21)");
  analytic->add_option("--p", a_p, "link success probability (comma list)");
  analytic->add_option("--q", a_q, "swap probability (comma list)");
  analytic->add_option("--k", a_k, "slots per block: N, lo..hi[:step] or comma list");
  analytic->add_option("--mu", a_mu, "mean memory lifetime (comma list, 'inf')");
  analytic->add_option("--d", a_d, "chain edges: N, lo..hi[:step] or comma list");
  analytic->add_option("--mode", a_mode, "decoherence mode for --chain (default per_link)");

  auto* gen = app.add_subcommand("gen-topology", "write a topology document");
  std::string g_grid, g_sixnode, g_out;
  double g_q = 1.0;
  auto* g_grid_opt = gen->add_option("--grid", g_grid, "lattice as W,H:ax,ay:bx,by");
  auto* g_six_opt = gen->add_option("--sixnode", g_sixnode, "base, no23, noA3, 8-base, 8-no23 or 8-noA3");
  g_grid_opt->excludes(g_six_opt);
  gen->add_option("--q", g_q, "uniform swap probability of the repeaters (default 1)");
  gen->add_option("--out", g_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (simulate->parsed()) {
      const auto ex = detail::build_experiment(sim_flags);
      const auto est = estimate_rate(ex.topology, detail::scalar_config(ex.config, "simulate"));
      detail::CsvSink sink(sim_flags.out, kRateCsvHeader, out);
      sink.row(to_csv_row(est));
    } else if (sweep_cmd->parsed()) {
      const auto ex = detail::build_experiment(sweep_flags);
      ex.config.points();  // validate the grid before opening the output
      const auto results = sweep(ex.topology, ex.config);
      detail::CsvSink sink(sweep_flags.out, kRateCsvHeader, out);
      for (const auto& est : results) sink.row(to_csv_row(est));
    } else if (kopt->parsed()) {
      auto ex = detail::build_experiment(kopt_flags);
      if (k_max_opt->count()) ex.k_max = k_max;
      ex.config.k = {1};  // k is swept internally
      ScalarConfig cfg = detail::scalar_config(ex.config, "kopt");
      const auto res = find_k_opt(ex.topology, cfg, ex.k_max);
      {
        detail::CsvSink sink(kopt_flags.out, kRateCsvHeader, out);
        for (const auto& est : res.estimates) sink.row(to_csv_row(est));
      }
      err << fmt::format("k_opt={} separated={}\n", res.k_opt, res.separated ? "yes" : "no");
    } else if (explain->parsed()) {
      const auto ex = detail::build_experiment(explain_flags);
      const ScalarConfig cfg = detail::scalar_config(ex.config, "explain-snapshot");
      if (trial_index < 0) throw UsageError("trial index must be nonnegative");
      const TrialRunner runner(ex.topology, cfg);
      Rng rng = make_stream(cfg.run.seed, combination, static_cast<std::uint64_t>(trial_index));
      auto outcome = runner.run(rng);
      outcome.snapshot.seed = cfg.run.seed;
      nlohmann::json doc{{"format", io::kFormatVersion},
                         {"trial", trial_index},
                         {"combination", combination},
                         {"snapshot", io::snapshot_json(outcome.snapshot, runner.topology())},
                         {"plan", io::plan_json(outcome.plan, runner.topology())},
                         {"chains", io::chains_json(outcome.chains, runner.topology())},
                         {"yield", outcome.yield}};
      const std::string text = doc.dump(2) + "\n";
      if (explain_flags.out.empty()) {
        out << text;
      } else {
        std::ofstream f(explain_flags.out, std::ios::binary);
        if (!f) throw UsageError("cannot open '" + explain_flags.out + "' for writing");
        f << text;
      }
    } else if (oracle->parsed()) {
      if (o_limit > kMaxOracleLinkLimit) throw UsageError("--max-links cannot exceed 64");
      const Topology base = detail::load_topology(o_topology);
      const auto ps = detail::parse_probabilities(o_p, "p");
      const auto qs = o_q.empty() ? std::vector<std::optional<double>>{std::nullopt} : detail::parse_q_list(o_q);
      const auto ks = detail::parse_ints(o_k, "k");
      for (int kv : ks)
        if (kv < 1) throw UsageError("k must be a positive integer");
      const MetricKind metric = detail::resolve_metric(o_metric, base);
      if (o_snapshot.empty())
        for (int kv : ks)
          if (base.edge_count() * static_cast<std::size_t>(kv) > o_limit)
            throw SizeLimitError(fmt::format("exhaustive enumeration: {} link slots exceeds limit of {}",
                                             base.edge_count() * static_cast<std::size_t>(kv), o_limit));

      if (!o_snapshot.empty()) {
        if (qs.size() != 1) throw UsageError("--snapshot takes a single q");
        const Topology topo = qs[0] ? base.with_uniform_q(*qs[0]) : base;
        const Snapshot snap = io::parse_snapshot(detail::read_file(o_snapshot, "snapshot"), topo);
        const detail::LocalEvaluator local{topo, ConsumerDistances(topo, metric), o_straight};
        detail::CsvSink sink(o_out, kSingleSnapshotCsvHeader, out);
        sink.row(fmt::format("{},{},{},{}", snap.link_count(), format_number(snapshot_capacity_exact(snap, topo, o_limit)),
                             format_number(snapshot_capacity_greedy(snap, topo)), format_number(local(snap))));
      } else if (o_per_snapshot) {
        if (qs.size() != 1) throw UsageError("--per-snapshot takes a single q");
        const Topology topo = qs[0] ? base.with_uniform_q(*qs[0]) : base;
        const detail::LocalEvaluator local{topo, ConsumerDistances(topo, metric), o_straight};
        detail::CsvSink sink(o_out, kPerSnapshotCsvHeader, out);
        for (double p : ps)
          for (int k : ks) {
            std::uint64_t index = 0;
            for_each_snapshot(topo, p, k, o_limit, [&](const Snapshot& s, double prob) {
              sink.row(fmt::format("{},{},{},{},{},{},{},{}", format_number(p), k, index++, format_number(prob),
                                   s.link_count(), format_number(snapshot_capacity_exact(s, topo, kMaxOracleLinkLimit)),
                                   format_number(snapshot_capacity_greedy(s, topo)), format_number(local(s))));
            });
          }
      } else {
        if (!o_enumerate) throw UsageError("oracle needs one of --enumerate, --per-snapshot or --snapshot FILE");
        detail::CsvSink sink(o_out, kEnumerateCsvHeader, out);
        for (double p : ps)
          for (const auto& q : qs)
            for (int k : ks) {
              const Topology topo = q ? base.with_uniform_q(*q) : base;
              const detail::LocalEvaluator local{topo, ConsumerDistances(topo, metric), o_straight};
              double exact = 0.0, greedy = 0.0, dynamic = 0.0;
              std::uint64_t count = 0;
              for_each_snapshot(topo, p, k, o_limit, [&](const Snapshot& s, double prob) {
                ++count;
                if (prob == 0.0) return;
                exact += prob * snapshot_capacity_exact(s, topo, kMaxOracleLinkLimit);
                greedy += prob * snapshot_capacity_greedy(s, topo);
                dynamic += prob * local(s);
              });
              sink.row(fmt::format("{},{},{},{},{},{},{}", format_number(p),
                                   q ? format_number(*q) : std::string("topology"), k, count,
                                   format_number(exact / k), format_number(greedy / k), format_number(dynamic / k)));
            }
      }
    } else if (analytic->parsed()) {
      if (a_peff) {
        out << "p,k,p_eff\n";
        for (double p : detail::parse_probabilities(a_p, "p"))
          for (int k : detail::parse_ints(a_k, "k"))
            out << fmt::format("{},{},{}\n", format_number(p), k, format_number(p_eff(p, k)));
      } else if (a_bound) {
        const Topology topo = detail::load_topology(a_topology);
        out << "p,q,rate_bound\n";
        for (double p : detail::parse_probabilities(a_p, "p"))
          for (double q : detail::parse_probabilities(a_q, "q"))
            out << fmt::format("{},{},{}\n", format_number(p), format_number(q),
                               format_number(rate_bound_infinity(topo, p, q)));
      } else if (a_chain) {
        const DecoherenceMode mode = parse_decoherence_mode(a_mode);
        out << "d,q,k,mu,mode,chain_rate\n";
        for (int d : detail::parse_ints(a_d, "d"))
          for (double q : detail::parse_probabilities(a_q, "q"))
            for (int k : detail::parse_ints(a_k, "k"))
              for (double mu : detail::parse_reals(a_mu, "mu", true))
                out << fmt::format("{},{},{},{},{},{}\n", d, format_number(q), k, format_number(mu), to_string(mode),
                                   format_number(chain_rate_p1({d, q, k, mu, mode})));
      } else {
        throw UsageError("analytic needs one of --peff, --bound or --chain");
      }
    } else if (gen->parsed()) {
      if (!(g_q >= 0.0 && g_q <= 1.0)) throw UsageError("q must lie in [0,1]");
      std::optional<Topology> topo;
      if (!g_grid.empty()) {
        topo = detail::load_topology("grid:" + g_grid).with_uniform_q(g_q);
      } else if (!g_sixnode.empty()) {
        const std::string name = g_sixnode.rfind("8-", 0) == 0 ? "sixnode8-" + g_sixnode.substr(2) : "sixnode-" + g_sixnode;
        if (name != "sixnode-base" && name != "sixnode-no23" && name != "sixnode-noA3" && name != "sixnode8-base" &&
            name != "sixnode8-no23" && name != "sixnode8-noA3")
          throw UsageError("unknown six-node variant '" + g_sixnode + "'");
        topo = io::resolve_topology(name).with_uniform_q(g_q);
      } else {
        throw UsageError("gen-topology needs --grid or --sixnode");
      }
      const std::string text = io::topology_json(*topo).dump(2) + "\n";
      if (g_out.empty()) {
        out << text;
      } else {
        std::ofstream f(g_out, std::ios::binary);
        if (!f) throw UsageError("cannot open '" + g_out + "' for writing");
        f << text;
      }
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const SizeLimitError& e) {
    err << "error: " << e.what() << '\n';
    return kSizeLimit;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}

}  // namespace qroute::cli

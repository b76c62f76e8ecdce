#pragma once

// Monte Carlo estimation of the average entanglement rate R(k): sample
// snapshots, route them with a protocol, average yield / k.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "qroute/errors.hpp"
#include "qroute/linkgen.hpp"
#include "qroute/oracle.hpp"
#include "qroute/rng.hpp"
#include "qroute/routing.hpp"
#include "qroute/topology.hpp"

namespace qroute {

enum class Protocol { dynamic, fixed_paths };

inline std::string_view to_string(Protocol p) { return p == Protocol::dynamic ? "dynamic" : "static"; }

inline Protocol parse_protocol(std::string_view s) {
  if (s == "dynamic") return Protocol::dynamic;
  if (s == "static") return Protocol::fixed_paths;
  throw UsageError("unknown protocol '" + std::string(s) + "'");
}

struct ProtocolSettings {
  Protocol protocol = Protocol::dynamic;
  MetricKind metric = MetricKind::euclidean;
  bool straight_path = true;
  bool single_success = false;
  DecoherenceMode mode = DecoherenceMode::per_qubit;
};

// One point of parameter space. An unset q keeps the topology's per-node values.
struct ParameterPoint {
  double p = 1.0;
  std::optional<double> q;
  int k = 1;
  double mu = kInfiniteLifetime;
};

struct RunOptions {
  std::int64_t trials = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool checked = false;  // per-trial invariant assertions
  std::size_t oracle_link_limit = kDefaultOracleLinkLimit;
};

struct ScalarConfig {
  ProtocolSettings settings;
  ParameterPoint point;
  RunOptions run;
};

struct RateEstimate {
  ProtocolSettings settings;
  ParameterPoint point;
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
  double mean = 0.0;    // ebits per time slot
  double stderr_ = 0.0;
};

// Everything one trial needs that does not change between trials.
class TrialRunner {
 public:
  struct Outcome {
    Snapshot snapshot;
    SwapPlan plan;
    ChainSet chains;
    double yield = 0.0;
  };

  TrialRunner(const Topology& topo, const ScalarConfig& cfg)
      : topo_(cfg.point.q ? topo.with_uniform_q(*cfg.point.q) : topo),
        cfg_(cfg),
        link_params_{cfg.point.p, cfg.point.k, cfg.point.mu, cfg.settings.mode, 1.0} {
    link_params_.validate();
    if (cfg_.settings.protocol == Protocol::dynamic)
      distances_.emplace(topo_, cfg_.settings.metric);
    else
      paths_ = greedy_edge_disjoint_paths(topo_);
  }

  const Topology& topology() const { return topo_; }

  Outcome run(Rng& rng) const {
    Outcome out;
    out.snapshot = generate_snapshot(topo_, link_params_, rng);
    if (cfg_.settings.single_success) out.snapshot = single_success_filter(out.snapshot);
    out.plan = distances_ ? dynamic_internal_phase(out.snapshot, topo_, *distances_, cfg_.settings.straight_path)
                          : static_internal_phase(out.snapshot, topo_, paths_);
    out.chains = trace_chains(out.plan, out.snapshot, topo_);
    out.yield = snapshot_yield(out.chains, topo_);
    if (cfg_.run.checked) check(out);
    return out;
  }

  double yield(Rng& rng) const { return run(rng).yield; }

 private:
  void check(const Outcome& out) const {
    std::vector<LinkRef> seen;
    for (const Chain& c : out.chains.chains) seen.insert(seen.end(), c.links.begin(), c.links.end());
    std::sort(seen.begin(), seen.end(), [](const LinkRef& a, const LinkRef& b) {
      return a.edge != b.edge ? a.edge < b.edge : a.slot < b.slot;
    });
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
      throw InvariantError("a link was assigned to two chains");
    if (out.snapshot.link_count() <= cfg_.run.oracle_link_limit) {
      const double cap = snapshot_capacity_exact(out.snapshot, topo_, cfg_.run.oracle_link_limit);
      if (out.yield > cap + 1e-9) throw InvariantError("protocol yield exceeds the exact snapshot capacity");
    }
  }

  Topology topo_;
  ScalarConfig cfg_;
  LinkParams link_params_;
  std::optional<ConsumerDistances> distances_;
  PathSet paths_;
};

// Trial yields are stored by index and reduced in order, so the result does
// not depend on the number of threads.
inline RateEstimate estimate_rate(const Topology& topo, const ScalarConfig& cfg, std::uint64_t combination = 0) {
  if (cfg.run.trials < 1) throw UsageError("trials must be at least 1");
  const TrialRunner runner(topo, cfg);
  const auto n = static_cast<std::size_t>(cfg.run.trials);
  std::vector<double> yields(n, 0.0);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng = make_stream(cfg.run.seed, combination, i);
      yields[i] = runner.yield(rng);
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(cfg.run.threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    work(0, n);
  } else {
    constexpr std::size_t kChunk = 64;
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        try {
          for (std::size_t b; (b = next.fetch_add(kChunk)) < n;) work(b, std::min(n, b + kChunk));
        } catch (...) {
          errors[t] = std::current_exception();
          next = n;
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  const double k = cfg.point.k;
  double sum = 0.0;
  for (double y : yields) sum += y / k;
  const double mean = sum / static_cast<double>(n);
  double sq = 0.0;
  for (double y : yields) sq += (y / k - mean) * (y / k - mean);
  const double sd = n > 1 ? std::sqrt(sq / static_cast<double>(n - 1)) : 0.0;

  return {cfg.settings, cfg.point, cfg.run.trials, cfg.run.seed, mean, sd / std::sqrt(static_cast<double>(n))};
}

// Settings plus a list of values per parameter; the grid of combinations is
// swept with p outermost and mu innermost.
struct ExperimentConfig {
  ProtocolSettings settings;
  std::vector<double> p{1.0};
  std::vector<std::optional<double>> q{std::nullopt};
  std::vector<int> k{1};
  std::vector<double> mu{kInfiniteLifetime};
  RunOptions run;

  static constexpr std::size_t kMaxCombinations = 100000;

  std::vector<ParameterPoint> points() const {
    if (p.empty() || q.empty() || k.empty() || mu.empty()) throw UsageError("sweep lists must be nonempty");
    const int swept = (p.size() > 1) + (q.size() > 1) + (k.size() > 1) + (mu.size() > 1);
    if (swept > 2) throw UsageError("at most two parameters may be swept per run");
    const std::size_t total = p.size() * q.size() * k.size() * mu.size();
    if (total > kMaxCombinations) throw SizeLimitError("sweep has " + std::to_string(total) + " combinations");
    std::vector<ParameterPoint> out;
    out.reserve(total);
    for (double pv : p)
      for (const auto& qv : q)
        for (int kv : k)
          for (double mv : mu) out.push_back({pv, qv, kv, mv});
    return out;
  }
};

inline std::vector<RateEstimate> sweep(const Topology& topo, const ExperimentConfig& cfg) {
  std::vector<RateEstimate> out;
  const auto points = cfg.points();
  for (std::size_t i = 0; i < points.size(); ++i)
    out.push_back(estimate_rate(topo, ScalarConfig{cfg.settings, points[i], cfg.run}, i));
  return out;
}

struct KOptResult {
  int k_opt = 1;
  bool separated = false;  // argmax beats each neighbouring k by >= 2 sigma
  std::vector<RateEstimate> estimates;  // k = 1..k_max
};

inline KOptResult find_k_opt(const Topology& topo, ScalarConfig cfg, int k_max) {
  if (k_max < 1) throw UsageError("k_max must be a positive integer");
  KOptResult res;
  for (int k = 1; k <= k_max; ++k) {
    cfg.point.k = k;
    res.estimates.push_back(estimate_rate(topo, cfg, static_cast<std::uint64_t>(k - 1)));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < res.estimates.size(); ++i)
    if (res.estimates[i].mean > res.estimates[best].mean) best = i;
  res.k_opt = static_cast<int>(best) + 1;

  auto beats = [&](std::size_t other) {
    const auto& a = res.estimates[best];
    const auto& b = res.estimates[other];
    const double sigma = std::hypot(a.stderr_, b.stderr_);
    return a.mean - b.mean > 0.0 && a.mean - b.mean >= 2.0 * sigma;
  };
  res.separated = true;
  if (best > 0) res.separated = res.separated && beats(best - 1);
  if (best + 1 < res.estimates.size()) res.separated = res.separated && beats(best + 1);
  return res;
}

inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

inline constexpr std::string_view kRateCsvHeader =
    "protocol,metric,straight_path,single_success,p,q,k,mu,trials,mean_rate,stderr,seed";

inline std::string to_csv_row(const RateEstimate& e) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}", to_string(e.settings.protocol),
                     to_string(e.settings.metric), e.settings.straight_path ? 1 : 0,
                     e.settings.single_success ? 1 : 0, format_number(e.point.p),
                     e.point.q ? format_number(*e.point.q) : std::string("topology"), e.point.k,
                     format_number(e.point.mu), e.trials, format_number(e.mean), format_number(e.stderr_), e.seed);
}

}  // namespace qroute

#pragma once

// Global-knowledge baselines. The exact snapshot capacity is the best packing
// of link-disjoint alice-bob paths, each worth the product of the swap
// probabilities at its internal nodes; it is found by branch and bound over
// all simple paths of the surviving-link graph. Paths revisiting a node are
// never needed: cutting out the loop frees links and drops swaps.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qroute/errors.hpp"
#include "qroute/linkgen.hpp"
#include "qroute/topology.hpp"

namespace qroute {

inline constexpr std::size_t kDefaultOracleLinkLimit = 24;
inline constexpr std::size_t kMaxOracleLinkLimit = 64;

namespace detail {

// Links on one edge are interchangeable, so a packing is a multiset of simple
// edge paths whose multiplicities respect each edge's link count.
class PathPacker {
 public:
  PathPacker(const Topology& topo, const Snapshot& snap) : topo_(topo), capacity_(snap.links.size()) {
    for (std::size_t e = 0; e < snap.links.size(); ++e) capacity_[e] = static_cast<int>(snap.links[e].size());
  }

  double solve() {
    std::vector<char> on_path(topo_.node_count(), 0);
    std::vector<EdgeId> edges;
    collect(topo_.alice(), 1.0, on_path, edges);
    std::stable_sort(paths_.begin(), paths_.end(),
                     [](const Candidate& a, const Candidate& b) { return a.value > b.value; });
    int alice_links = 0;
    int bob_links = 0;
    for (const Neighbor& nb : topo_.neighbors(topo_.alice())) alice_links += capacity_[nb.edge];
    for (const Neighbor& nb : topo_.neighbors(topo_.bob())) bob_links += capacity_[nb.edge];
    best_ = 0.0;
    search(0, std::min(alice_links, bob_links), 0.0);
    return best_;
  }

 private:
  struct Candidate {
    std::vector<EdgeId> edges;
    double value;
  };

  void collect(NodeId at, double value, std::vector<char>& on_path, std::vector<EdgeId>& edges) {
    if (at == topo_.bob()) {
      paths_.push_back({edges, value});
      return;
    }
    on_path[at] = 1;
    const double through = at == topo_.alice() ? value : value * topo_.swap_prob(at);
    for (const Neighbor& nb : topo_.neighbors(at)) {
      if (on_path[nb.node] || capacity_[nb.edge] == 0) continue;
      edges.push_back(nb.edge);
      collect(nb.node, through, on_path, edges);
      edges.pop_back();
    }
    on_path[at] = 0;
  }

  // `budget` bounds how many more paths can fit (free consumer links).
  void search(std::size_t i, int budget, double value) {
    if (value > best_) best_ = value;
    if (i == paths_.size() || budget == 0) return;
    if (value + budget * paths_[i].value <= best_ * (1.0 + 1e-15)) return;
    const Candidate& c = paths_[i];
    int fit = budget;
    for (EdgeId e : c.edges) fit = std::min(fit, capacity_[e]);
    for (int n = fit; n >= 0; --n) {
      for (EdgeId e : c.edges) capacity_[e] -= n;
      search(i + 1, budget - n, value + n * c.value);
      for (EdgeId e : c.edges) capacity_[e] += n;
    }
  }

  const Topology& topo_;
  std::vector<int> capacity_;
  std::vector<Candidate> paths_;
  double best_ = 0.0;
};

}  // namespace detail

inline double snapshot_capacity_exact(const Snapshot& snap, const Topology& topo,
                                      std::size_t max_links = kDefaultOracleLinkLimit) {
  if (snap.links.size() != topo.edge_count()) throw InvariantError("snapshot does not match topology");
  if (max_links > kMaxOracleLinkLimit) throw UsageError("oracle link limit cannot exceed 64");
  const std::size_t links = snap.link_count();
  if (links > max_links)
    throw SizeLimitError("exact oracle: " + std::to_string(links) + " surviving links exceeds limit of " +
                         std::to_string(max_links));
  if (links == 0) return 0.0;
  return detail::PathPacker(topo, snap).solve();
}

// Repeated lexicographic shortest path on the surviving links, deleting one
// link per traversed edge each round.
inline double snapshot_capacity_greedy(const Snapshot& snap, const Topology& topo) {
  if (snap.links.size() != topo.edge_count()) throw InvariantError("snapshot does not match topology");
  std::vector<std::size_t> remaining(snap.links.size());
  for (std::size_t e = 0; e < snap.links.size(); ++e) remaining[e] = snap.links[e].size();
  double total = 0.0;
  while (true) {
    Path p = lexicographic_shortest_path(topo, topo.alice(), topo.bob(), [&](EdgeId e) { return remaining[e] > 0; });
    if (p.edges.empty()) break;
    double value = 1.0;
    for (std::size_t i = 1; i + 1 < p.nodes.size(); ++i) value *= topo.swap_prob(p.nodes[i]);
    for (EdgeId e : p.edges) --remaining[e];
    total += value;
  }
  return total;
}

// Replace every surviving link by a two-edge detour through a fresh node with
// swap probability 1. Original edges stay in the topology (keeping it
// connected) but carry no links; each detour edge carries one link in slot 1.
inline std::pair<Topology, Snapshot> multigraph_transform(const Snapshot& snap, const Topology& topo) {
  if (snap.links.size() != topo.edge_count()) throw InvariantError("snapshot does not match topology");
  std::vector<Node> nodes(topo.nodes().begin(), topo.nodes().end());
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (const Edge& e : topo.edges()) edges.emplace_back(e.u, e.v);
  const std::size_t original_edges = edges.size();
  for (EdgeId e = 0; e < static_cast<EdgeId>(snap.links.size()); ++e) {
    const Edge& edge = topo.edge(e);
    for (int slot : snap.links[e]) {
      const auto dummy = static_cast<NodeId>(nodes.size());
      nodes.push_back({"~" + topo.node(edge.u).name + "|" + topo.node(edge.v).name + "@" + std::to_string(slot),
                       std::nullopt, 1.0});
      edges.emplace_back(edge.u, dummy);
      edges.emplace_back(dummy, edge.v);
    }
  }
  Topology out(std::move(nodes), std::move(edges), topo.alice(), topo.bob());
  Snapshot s = Snapshot::empty(out, 1);
  s.params = snap.params;
  s.params.k = 1;
  s.seed = snap.seed;
  for (std::size_t e = original_edges; e < out.edge_count(); ++e) s.links[e] = {1};
  return {std::move(out), std::move(s)};
}

// Calls f(snapshot, probability) for every outcome of the |E|*k link-slot
// attempts under success probability p and infinite memory lifetime.
template <typename F>
void for_each_snapshot(const Topology& topo, double p, int k, std::size_t max_link_slots, F&& f) {
  if (!(p >= 0.0 && p <= 1.0)) throw UsageError("p must lie in [0,1]");
  if (k < 1) throw UsageError("k must be a positive integer");
  const std::size_t bits = topo.edge_count() * static_cast<std::size_t>(k);
  if (bits > max_link_slots || bits >= 63)
    throw SizeLimitError("exhaustive enumeration: " + std::to_string(bits) + " link slots exceeds limit of " +
                         std::to_string(max_link_slots));
  Snapshot snap = Snapshot::empty(topo, k);
  snap.params.p = p;
  const std::uint64_t count = std::uint64_t{1} << bits;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    const int s = std::popcount(mask);
    const double prob = std::pow(p, s) * std::pow(1.0 - p, static_cast<double>(bits) - s);
    for (std::size_t e = 0; e < topo.edge_count(); ++e) {
      auto& slots = snap.links[e];
      slots.clear();
      for (int t = 0; t < k; ++t)
        if (mask >> (e * k + t) & 1u) slots.push_back(t + 1);
    }
    f(static_cast<const Snapshot&>(snap), prob);
  }
}

// (1/k) * sum over all snapshots of P(S) * eval(S).
template <typename Eval>
double expected_rate_exhaustive(const Topology& topo, double p, int k, Eval&& eval,
                                std::size_t max_link_slots = kDefaultOracleLinkLimit) {
  double total = 0.0;
  for_each_snapshot(topo, p, k, max_link_slots, [&](const Snapshot& s, double prob) {
    if (prob > 0.0) total += prob * eval(s);
  });
  return total / k;
}

inline double average_capacity_exhaustive(const Topology& topo, double p, double q, int k,
                                          std::size_t max_link_slots = kDefaultOracleLinkLimit) {
  const Topology uniform = topo.with_uniform_q(q);
  return expected_rate_exhaustive(
      uniform, p, k, [&](const Snapshot& s) { return snapshot_capacity_exact(s, uniform, kMaxOracleLinkLimit); },
      max_link_slots);
}

inline double average_greedy_capacity_exhaustive(const Topology& topo, double p, double q, int k,
                                                 std::size_t max_link_slots = kDefaultOracleLinkLimit) {
  const Topology uniform = topo.with_uniform_q(q);
  return expected_rate_exhaustive(
      uniform, p, k, [&](const Snapshot& s) { return snapshot_capacity_greedy(s, uniform); }, max_link_slots);
}

}  // namespace qroute

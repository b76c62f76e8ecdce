#pragma once

// Internal phase: per-node swap decisions (distance-based dynamic protocol or
// fixed-path static protocol), chain tracing and snapshot yield.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "qroute/errors.hpp"
#include "qroute/linkgen.hpp"
#include "qroute/topology.hpp"

namespace qroute {

// One end of a link: the link on `edge` created in `slot`, held at `node`.
struct LinkEndpoint {
  EdgeId edge = 0;
  int slot = 0;
  NodeId node = 0;
  bool operator==(const LinkEndpoint&) const = default;
};

struct SwapPair {
  LinkEndpoint first;
  LinkEndpoint second;
  bool operator==(const SwapPair&) const = default;
};

struct SwapPlan {
  std::vector<std::vector<SwapPair>> pairings;  // indexed by node

  std::size_t swap_count() const {
    std::size_t n = 0;
    for (const auto& v : pairings) n += v.size();
    return n;
  }
  bool operator==(const SwapPlan&) const = default;
};

struct LinkRef {
  EdgeId edge = 0;
  int slot = 0;
  bool operator==(const LinkRef&) const = default;
};

struct Chain {
  std::vector<LinkRef> links;      // alice -> bob order
  std::vector<NodeId> swap_nodes;  // node of each BSM, in order

  int bsm_count() const { return static_cast<int>(links.size()) - 1; }
};

struct ChainSet {
  std::vector<Chain> chains;
  std::size_t leftover_links = 0;
};

// Static distances from every node to the two consumers.
struct ConsumerDistances {
  std::vector<double> to_alice;
  std::vector<double> to_bob;

  ConsumerDistances(const Topology& topo, MetricKind metric)
      : to_alice(distances_from(topo, metric, topo.alice())), to_bob(distances_from(topo, metric, topo.bob())) {}
};

namespace detail {

inline constexpr double kDistanceTolerance = 1e-9;

inline bool less(double a, double b) { return a < b - kDistanceTolerance; }

// Unpaired links held at one node, bucketed by neighbour.
struct NodeBuckets {
  std::vector<Neighbor> neighbors;
  std::vector<std::vector<int>> slots;  // increasing; back() is most recent
};

// Position of the nonempty bucket minimising `dist`, skipping `exclude`.
// With a `tie_break` field, equally close candidates prefer the one farthest
// from the other consumer; remaining ties go to the smallest neighbour id.
inline int closest_bucket(const NodeBuckets& b, const std::vector<double>& dist,
                          const std::vector<double>* tie_break, int exclude = -1) {
  int best = -1;
  for (int j = 0; j < static_cast<int>(b.neighbors.size()); ++j) {
    if (j == exclude || b.slots[j].empty()) continue;
    if (best < 0) {
      best = j;
      continue;
    }
    const NodeId cand = b.neighbors[j].node;
    const NodeId cur = b.neighbors[best].node;
    if (less(dist[cand], dist[cur]) ||
        (tie_break && !less(dist[cur], dist[cand]) && less((*tie_break)[cur], (*tie_break)[cand])))
      best = j;
  }
  return best;
}

}  // namespace detail

// Swap decisions of a single repeater. Uses only the node's own links and
// static distances, so nodes can be planned in any order.
inline std::vector<SwapPair> plan_node_dynamic(const Snapshot& snap, const Topology& topo, NodeId n,
                                               const ConsumerDistances& dist, bool straight_path) {
  std::vector<SwapPair> out;
  if (topo.is_consumer(n)) return out;

  detail::NodeBuckets b;
  std::size_t remaining = 0;
  for (const Neighbor& nb : topo.neighbors(n)) {
    b.neighbors.push_back(nb);
    b.slots.push_back(snap.links.at(nb.edge));
    remaining += b.slots.back().size();
  }
  const auto& dA = dist.to_alice;
  const auto& dB = dist.to_bob;
  auto node_of = [&](int j) { return b.neighbors[j].node; };
  auto pop = [&](int j) {
    const int slot = b.slots[j].back();
    b.slots[j].pop_back();
    return LinkEndpoint{b.neighbors[j].edge, slot, n};
  };
  auto pair = [&](int j1, int j2) {
    LinkEndpoint e1 = pop(j1);
    LinkEndpoint e2 = pop(j2);
    out.push_back({e1, e2});
    remaining -= 2;
  };

  while (remaining >= 2) {
    const int v = detail::closest_bucket(b, dA, straight_path ? &dB : nullptr);
    const int w = detail::closest_bucket(b, dB, straight_path ? &dA : nullptr);
    if (v != w) {
      pair(v, w);
      continue;
    }
    const int v2 = detail::closest_bucket(b, dA, straight_path ? &dB : nullptr, v);
    if (v2 < 0) {
      pair(v, v);  // self-connection: last resort
      continue;
    }
    const int w2 = detail::closest_bucket(b, dB, straight_path ? &dA : nullptr, w);
    const double via_v2 = dA[node_of(v2)] + dB[node_of(w)];
    const double via_w2 = dA[node_of(v)] + dB[node_of(w2)];
    if (detail::less(via_v2, via_w2)) {
      pair(v2, w);
    } else if (detail::less(via_w2, via_v2)) {
      pair(v, w2);
    } else if (straight_path &&
               detail::less(dB[node_of(v)] + dA[node_of(w2)], dB[node_of(v2)] + dA[node_of(w)])) {
      pair(v2, w);
    } else {
      pair(v, w2);
    }
  }
  return out;
}

inline SwapPlan dynamic_internal_phase(const Snapshot& snap, const Topology& topo, const ConsumerDistances& dist,
                                       bool straight_path) {
  SwapPlan plan;
  plan.pairings.resize(topo.node_count());
  for (NodeId n = 0; n < static_cast<NodeId>(topo.node_count()); ++n)
    plan.pairings[n] = plan_node_dynamic(snap, topo, n, dist, straight_path);
  return plan;
}

inline SwapPlan dynamic_internal_phase(const Snapshot& snap, const Topology& topo, MetricKind metric,
                                       bool straight_path) {
  return dynamic_internal_phase(snap, topo, ConsumerDistances(topo, metric), straight_path);
}

// Fixed-path protocol: along each path, join the j-th most recent links of
// consecutive edges for j = 1..(fewest links on any path edge).
inline SwapPlan static_internal_phase(const Snapshot& snap, const Topology& topo, const PathSet& paths) {
  SwapPlan plan;
  plan.pairings.resize(topo.node_count());
  for (const Path& path : paths.paths) {
    std::size_t chains = path.edges.empty() ? 0 : std::numeric_limits<std::size_t>::max();
    for (EdgeId e : path.edges) chains = std::min(chains, snap.links.at(e).size());
    for (std::size_t i = 1; i < path.nodes.size() - 1; ++i) {
      const NodeId n = path.nodes[i];
      const auto& in = snap.links[path.edges[i - 1]];
      const auto& out = snap.links[path.edges[i]];
      for (std::size_t j = 0; j < chains; ++j) {
        plan.pairings[n].push_back({LinkEndpoint{path.edges[i - 1], in[in.size() - 1 - j], n},
                                    LinkEndpoint{path.edges[i], out[out.size() - 1 - j], n}});
      }
    }
  }
  return plan;
}

// Splice links through the plan's pairings and keep the alice-bob chains.
// Throws InvariantError if the plan is inconsistent with the snapshot.
inline ChainSet trace_chains(const SwapPlan& plan, const Snapshot& snap, const Topology& topo) {
  if (snap.links.size() != topo.edge_count()) throw InvariantError("snapshot does not match topology");
  std::vector<std::size_t> offset(snap.links.size() + 1, 0);
  for (std::size_t e = 0; e < snap.links.size(); ++e) offset[e + 1] = offset[e] + snap.links[e].size();
  const std::size_t total = offset.back();

  auto link_index = [&](EdgeId e, int slot) -> std::size_t {
    const auto& slots = snap.links.at(e);
    auto it = std::lower_bound(slots.begin(), slots.end(), slot);
    if (it == slots.end() || *it != slot)
      throw InvariantError("plan references a link absent from the snapshot");
    return offset[e] + static_cast<std::size_t>(it - slots.begin());
  };
  // Endpoint id: 2*link + (0 at the edge's u end, 1 at its v end).
  auto endpoint_id = [&](const LinkEndpoint& ep) -> std::size_t {
    const Edge& edge = topo.edge(ep.edge);
    if (ep.node != edge.u && ep.node != edge.v) throw InvariantError("endpoint not incident to its edge");
    return 2 * link_index(ep.edge, ep.slot) + (ep.node == edge.u ? 0 : 1);
  };

  constexpr std::size_t kFree = static_cast<std::size_t>(-1);
  std::vector<std::size_t> spliced(2 * total, kFree);
  for (NodeId n = 0; n < static_cast<NodeId>(plan.pairings.size()); ++n) {
    for (const SwapPair& sp : plan.pairings[n]) {
      if (sp.first.node != n || sp.second.node != n) throw InvariantError("pairing uses an endpoint held elsewhere");
      if (topo.is_consumer(n)) throw InvariantError("consumers do not swap");
      const std::size_t a = endpoint_id(sp.first);
      const std::size_t b = endpoint_id(sp.second);
      if (a == b || spliced[a] != kFree || spliced[b] != kFree)
        throw InvariantError("link endpoint paired more than once");
      spliced[a] = b;
      spliced[b] = a;
    }
  }

  std::vector<LinkRef> refs(total);
  for (std::size_t e = 0; e < snap.links.size(); ++e)
    for (std::size_t j = 0; j < snap.links[e].size(); ++j)
      refs[offset[e] + j] = {static_cast<EdgeId>(e), snap.links[e][j]};
  auto endpoint_node = [&](std::size_t ep) {
    const Edge& edge = topo.edge(refs[ep / 2].edge);
    return (ep % 2 == 0) ? edge.u : edge.v;
  };

  ChainSet out;
  std::size_t used = 0;
  for (std::size_t start = 0; start < 2 * total; ++start) {
    if (endpoint_node(start) != topo.alice()) continue;
    Chain chain;
    std::size_t cur = start;
    bool reached_bob = false;
    while (true) {
      chain.links.push_back(refs[cur / 2]);
      const std::size_t far = cur ^ 1u;
      const NodeId at = endpoint_node(far);
      if (at == topo.bob()) {
        reached_bob = true;
        break;
      }
      if (at == topo.alice() || spliced[far] == kFree) break;
      chain.swap_nodes.push_back(at);
      cur = spliced[far];
    }
    if (reached_bob) {
      used += chain.links.size();
      out.chains.push_back(std::move(chain));
    }
  }
  out.leftover_links = total - used;
  return out;
}

// Expected number of delivered pairs: sum over chains of the product of the
// BSM success probabilities along the chain (one factor per swap).
inline double snapshot_yield(const ChainSet& chains, const Topology& topo) {
  double total = 0.0;
  for (const Chain& c : chains.chains) {
    double prod = 1.0;
    for (NodeId n : c.swap_nodes) prod *= topo.swap_prob(n);
    total += prod;
  }
  return total;
}

// Keep only the most recent surviving link on each edge.
inline Snapshot single_success_filter(const Snapshot& snap) {
  Snapshot out = snap;
  for (auto& slots : out.links)
    if (slots.size() > 1) slots.erase(slots.begin(), slots.end() - 1);
  return out;
}

}  // namespace qroute

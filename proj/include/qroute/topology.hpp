#pragma once

// Network graphs for repeater-network routing: construction, validation,
// distance metrics and greedy edge-disjoint shortest paths.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qroute/errors.hpp"

namespace qroute {

using NodeId = int;
using EdgeId = int;

struct Coord {
  int x = 0;
  int y = 0;
  auto operator<=>(const Coord&) const = default;
};

struct Node {
  std::string name;
  std::optional<Coord> coord;
  double swap_prob = 1.0;  // ignored for consumers
};

// Undirected edge, stored with u < v.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  NodeId other(NodeId n) const { return n == u ? v : u; }
  bool operator==(const Edge&) const = default;
};

struct Neighbor {
  NodeId node;
  EdgeId edge;
};

// Immutable, validated network: simple, connected, two distinct consumers.
class Topology {
 public:
  Topology(std::vector<Node> nodes, std::vector<std::pair<NodeId, NodeId>> edges, NodeId alice,
           NodeId bob)
      : nodes_(std::move(nodes)), alice_(alice), bob_(bob) {
    const auto n = static_cast<NodeId>(nodes_.size());
    auto valid = [n](NodeId id) { return id >= 0 && id < n; };
    if (!valid(alice_) || !valid(bob_)) throw InvariantError("consumer is not a node of the graph");
    if (alice_ == bob_) throw InvariantError("alice and bob must be distinct nodes");

    std::unordered_map<std::string_view, NodeId> seen;
    for (NodeId i = 0; i < n; ++i) {
      const Node& node = nodes_[i];
      if (node.name.empty()) throw InvariantError("node " + std::to_string(i) + " has an empty name");
      if (!seen.emplace(node.name, i).second)
        throw InvariantError("duplicate node name '" + node.name + "'");
      if (!(node.swap_prob >= 0.0 && node.swap_prob <= 1.0))
        throw InvariantError("swap probability of node '" + node.name + "' outside [0,1]");
    }

    adjacency_.resize(nodes_.size());
    edges_.reserve(edges.size());
    for (auto [a, b] : edges) {
      if (!valid(a) || !valid(b)) throw InvariantError("edge references an unknown node");
      if (a == b) throw InvariantError("self-loop at node '" + nodes_[a].name + "'");
      if (a > b) std::swap(a, b);
      if (find_edge(a, b))
        throw InvariantError("duplicate edge (" + nodes_[a].name + "," + nodes_[b].name + ")");
      const auto id = static_cast<EdgeId>(edges_.size());
      edges_.push_back({a, b});
      adjacency_[a].push_back({b, id});
      adjacency_[b].push_back({a, id});
    }
    for (auto& list : adjacency_)
      std::sort(list.begin(), list.end(), [](const Neighbor& l, const Neighbor& r) { return l.node < r.node; });

    // Consumers never swap.
    nodes_[alice_].swap_prob = 1.0;
    nodes_[bob_].swap_prob = 1.0;

    if (!connected()) throw InvariantError("graph is not connected");
  }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const Node& node(NodeId n) const { return nodes_.at(n); }
  std::span<const Node> nodes() const { return nodes_; }
  const Edge& edge(EdgeId e) const { return edges_.at(e); }
  std::span<const Edge> edges() const { return edges_; }
  std::span<const Neighbor> neighbors(NodeId n) const { return adjacency_.at(n); }
  std::size_t degree(NodeId n) const { return adjacency_.at(n).size(); }

  NodeId alice() const { return alice_; }
  NodeId bob() const { return bob_; }
  bool is_consumer(NodeId n) const { return n == alice_ || n == bob_; }
  double swap_prob(NodeId n) const { return nodes_.at(n).swap_prob; }

  bool embedded() const {
    return std::all_of(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.coord.has_value(); });
  }

  std::optional<EdgeId> find_edge(NodeId a, NodeId b) const {
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= adjacency_.size()) return std::nullopt;
    for (const Neighbor& nb : adjacency_[a])
      if (nb.node == b) return nb.edge;
    return std::nullopt;
  }

  std::optional<NodeId> find_node(std::string_view name) const {
    for (NodeId i = 0; i < static_cast<NodeId>(nodes_.size()); ++i)
      if (nodes_[i].name == name) return i;
    return std::nullopt;
  }

  // Copy of this topology with every repeater's swap probability set to q.
  Topology with_uniform_q(double q) const {
    if (!(q >= 0.0 && q <= 1.0)) throw InvariantError("swap probability outside [0,1]");
    Topology copy = *this;
    for (NodeId i = 0; i < static_cast<NodeId>(copy.nodes_.size()); ++i)
      if (!copy.is_consumer(i)) copy.nodes_[i].swap_prob = q;
    return copy;
  }

  // Copy without the edge joining the two named nodes.
  Topology without_edge(NodeId a, NodeId b) const {
    if (!find_edge(a, b)) throw InvariantError("no such edge to remove");
    std::vector<std::pair<NodeId, NodeId>> kept;
    for (const Edge& e : edges_)
      if (!((e.u == a && e.v == b) || (e.u == b && e.v == a))) kept.emplace_back(e.u, e.v);
    return Topology(nodes_, std::move(kept), alice_, bob_);
  }

 private:
  bool connected() const {
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<NodeId> stack{alice_};
    seen[alice_] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      NodeId n = stack.back();
      stack.pop_back();
      for (const Neighbor& nb : adjacency_[n])
        if (!seen[nb.node]) {
          seen[nb.node] = 1;
          ++count;
          stack.push_back(nb.node);
        }
    }
    return count == nodes_.size();
  }

  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
  NodeId alice_;
  NodeId bob_;
};

// Node id of lattice point (x, y) in a grid of the given width.
constexpr NodeId grid_node(int width, Coord c) { return c.y * width + c.x; }

// 4-neighbour square lattice; node ids are row-major, names "x,y".
inline Topology grid_topology(int width, int height, Coord alice, Coord bob) {
  if (width < 2 || height < 2) throw InvariantError("grid dimensions must be at least 2x2");
  auto inside = [&](Coord c) { return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height; };
  if (!inside(alice) || !inside(bob)) throw InvariantError("consumer coordinates outside the grid");
  if (alice == bob) throw InvariantError("alice and bob must be distinct nodes");

  std::vector<Node> nodes;
  nodes.reserve(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      nodes.push_back({std::to_string(x) + "," + std::to_string(y), Coord{x, y}, 1.0});

  std::vector<std::pair<NodeId, NodeId>> edges;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      NodeId here = grid_node(width, {x, y});
      if (x + 1 < width) edges.emplace_back(here, grid_node(width, {x + 1, y}));
      if (y + 1 < height) edges.emplace_back(here, grid_node(width, {x, y + 1}));
    }
  return Topology(std::move(nodes), std::move(edges), grid_node(width, alice), grid_node(width, bob));
}

enum class MetricKind { euclidean, hop, manhattan };

inline std::string_view to_string(MetricKind m) {
  switch (m) {
    case MetricKind::euclidean: return "euclidean";
    case MetricKind::hop: return "hop";
    case MetricKind::manhattan: return "manhattan";
  }
  return "?";
}

inline MetricKind parse_metric(std::string_view s) {
  if (s == "euclidean") return MetricKind::euclidean;
  if (s == "hop") return MetricKind::hop;
  if (s == "manhattan") return MetricKind::manhattan;
  throw UsageError("unknown metric '" + std::string(s) + "'");
}

// BFS hop counts from `source`; unreachable nodes get -1.
inline std::vector<int> hop_counts(const Topology& topo, NodeId source) {
  std::vector<int> dist(topo.node_count(), -1);
  std::deque<NodeId> queue{source};
  dist.at(source) = 0;
  while (!queue.empty()) {
    NodeId n = queue.front();
    queue.pop_front();
    for (const Neighbor& nb : topo.neighbors(n))
      if (dist[nb.node] < 0) {
        dist[nb.node] = dist[n] + 1;
        queue.push_back(nb.node);
      }
  }
  return dist;
}

// Distance from `source` to every node under `metric`.
inline std::vector<double> distances_from(const Topology& topo, MetricKind metric, NodeId source) {
  std::vector<double> out(topo.node_count());
  if (metric == MetricKind::hop) {
    auto hops = hop_counts(topo, source);
    for (std::size_t i = 0; i < hops.size(); ++i) out[i] = hops[i];
    return out;
  }
  if (!topo.embedded()) throw InvariantError(std::string(to_string(metric)) + " metric needs node coordinates");
  const Coord s = *topo.node(source).coord;
  for (NodeId i = 0; i < static_cast<NodeId>(topo.node_count()); ++i) {
    const Coord c = *topo.node(i).coord;
    const double dx = c.x - s.x;
    const double dy = c.y - s.y;
    out[i] = metric == MetricKind::euclidean ? std::hypot(dx, dy) : std::abs(dx) + std::abs(dy);
  }
  return out;
}

inline double distance(const Topology& topo, MetricKind metric, NodeId u, NodeId v) {
  if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= topo.node_count() ||
      static_cast<std::size_t>(v) >= topo.node_count())
    throw InvariantError("distance query on an unknown node");
  return distances_from(topo, metric, u)[v];
}

struct Path {
  std::vector<NodeId> nodes;  // alice ... bob
  std::vector<EdgeId> edges;  // edges[i] joins nodes[i] and nodes[i+1]

  int hops() const { return static_cast<int>(edges.size()); }
};

struct PathSet {
  std::vector<Path> paths;  // nondecreasing hop count
};

// Lexicographically smallest (by node id sequence) shortest path from `src`
// to `dst` over edges for which `usable(edge)` holds. Empty if unreachable.
template <typename Usable>
Path lexicographic_shortest_path(const Topology& topo, NodeId src, NodeId dst, Usable&& usable) {
  std::vector<int> to_dst(topo.node_count(), -1);
  std::deque<NodeId> queue{dst};
  to_dst[dst] = 0;
  while (!queue.empty()) {
    NodeId n = queue.front();
    queue.pop_front();
    if (n == src) break;
    for (const Neighbor& nb : topo.neighbors(n))
      if (to_dst[nb.node] < 0 && usable(nb.edge)) {
        to_dst[nb.node] = to_dst[n] + 1;
        queue.push_back(nb.node);
      }
  }
  Path path;
  if (to_dst[src] < 0) return path;
  NodeId cur = src;
  path.nodes.push_back(cur);
  while (cur != dst) {
    // Neighbours are sorted by id, so the first hit is the smallest.
    for (const Neighbor& nb : topo.neighbors(cur))
      if (usable(nb.edge) && to_dst[nb.node] >= 0 && to_dst[nb.node] == to_dst[cur] - 1) {
        path.edges.push_back(nb.edge);
        path.nodes.push_back(nb.node);
        cur = nb.node;
        break;
      }
  }
  return path;
}

// Repeatedly take the lexicographically smallest shortest alice-bob path and
// delete its edges, up to min(deg(alice), deg(bob)) paths.
inline PathSet greedy_edge_disjoint_paths(const Topology& topo) {
  const std::size_t theta = std::min(topo.degree(topo.alice()), topo.degree(topo.bob()));
  std::vector<char> used(topo.edge_count(), 0);
  PathSet out;
  while (out.paths.size() < theta) {
    Path p = lexicographic_shortest_path(topo, topo.alice(), topo.bob(), [&](EdgeId e) { return !used[e]; });
    if (p.edges.empty()) break;
    for (EdgeId e : p.edges) used[e] = 1;
    out.paths.push_back(std::move(p));
  }
  return out;
}

}  // namespace qroute

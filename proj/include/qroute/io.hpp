#pragma once

// JSON documents (format 1) for topologies, snapshots and routing traces,
// plus the named built-in topologies.
//
// Topology document:
//   {
//     "format": 1,
//     "default_q": 0.9,                       optional, default 1
//     "nodes": [ {"id": "A"}, {"id": "2", "x": 0, "y": 1, "q": 0.8}, ... ],
//     "edges": [ ["A", "2"], ... ],
//     "alice": "A",
//     "bob": "B"
//   }
// Coordinates are optional but must be given for all nodes or none.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qroute/errors.hpp"
#include "qroute/linkgen.hpp"
#include "qroute/routing.hpp"
#include "qroute/topology.hpp"

namespace qroute::io {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

namespace detail {

inline json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(col), "malformed JSON");
  }
}

inline void check_format(const json& doc) {
  if (!doc.is_object()) throw ParseError("document", "expected a JSON object");
  if (!doc.contains("format")) throw ParseError("format", "missing format version");
  if (!doc["format"].is_number_integer() || doc["format"].get<int>() != kFormatVersion)
    throw ParseError("format", "unsupported format version (expected 1)");
}

inline std::string node_id(const json& j, const std::string& locus) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw ParseError(locus, "expected a node id (string or integer)");
}

inline double number(const json& j, const std::string& locus) {
  if (!j.is_number()) throw ParseError(locus, "expected a number");
  return j.get<double>();
}

inline NodeId lookup(const Topology& topo, const std::string& name, const std::string& locus) {
  auto id = topo.find_node(name);
  if (!id) throw ParseError(locus, "unknown node '" + name + "'");
  return *id;
}

inline json lifetime_json(double mu) { return std::isinf(mu) ? json("inf") : json(mu); }

inline double lifetime_value(const json& j, const std::string& locus) {
  if (j.is_string() && j.get<std::string>() == "inf") return kInfiniteLifetime;
  return number(j, locus);
}

}  // namespace detail

inline Topology parse_topology(std::string_view text) {
  const json doc = detail::parse_document(text);
  detail::check_format(doc);
  for (const char* key : {"nodes", "edges", "alice", "bob"})
    if (!doc.contains(key)) throw ParseError(key, "missing required key");
  const double default_q = doc.contains("default_q") ? detail::number(doc["default_q"], "default_q") : 1.0;

  const json& jnodes = doc["nodes"];
  if (!jnodes.is_array()) throw ParseError("nodes", "expected an array");
  std::vector<Node> nodes;
  std::size_t with_coords = 0;
  for (std::size_t i = 0; i < jnodes.size(); ++i) {
    const std::string locus = "nodes[" + std::to_string(i) + "]";
    const json& jn = jnodes[i];
    if (!jn.is_object() || !jn.contains("id")) throw ParseError(locus, "expected an object with an id");
    Node n;
    n.name = detail::node_id(jn["id"], locus + ".id");
    n.swap_prob = jn.contains("q") ? detail::number(jn["q"], locus + ".q") : default_q;
    if (jn.contains("x") || jn.contains("y")) {
      if (!jn.contains("x") || !jn.contains("y") || !jn["x"].is_number_integer() || !jn["y"].is_number_integer())
        throw ParseError(locus, "coordinates need integer x and y");
      n.coord = Coord{jn["x"].get<int>(), jn["y"].get<int>()};
      ++with_coords;
    }
    nodes.push_back(std::move(n));
  }
  if (with_coords != 0 && with_coords != nodes.size())
    throw ParseError("nodes", "coordinates must be given for every node or for none");

  auto index_of = [&](const std::string& name, const std::string& locus) -> NodeId {
    for (NodeId i = 0; i < static_cast<NodeId>(nodes.size()); ++i)
      if (nodes[i].name == name) return i;
    throw ParseError(locus, "unknown node '" + name + "'");
  };

  const json& jedges = doc["edges"];
  if (!jedges.is_array()) throw ParseError("edges", "expected an array");
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t i = 0; i < jedges.size(); ++i) {
    const std::string locus = "edges[" + std::to_string(i) + "]";
    const json& je = jedges[i];
    if (!je.is_array() || je.size() != 2) throw ParseError(locus, "expected a pair of node ids");
    edges.emplace_back(index_of(detail::node_id(je[0], locus), locus), index_of(detail::node_id(je[1], locus), locus));
  }
  const NodeId alice = index_of(detail::node_id(doc["alice"], "alice"), "alice");
  const NodeId bob = index_of(detail::node_id(doc["bob"], "bob"), "bob");
  for (NodeId c : {alice, bob})
    if (jnodes[c].contains("q")) throw InvariantError("consumer '" + nodes[c].name + "' cannot carry a swap probability");
  return Topology(std::move(nodes), std::move(edges), alice, bob);
}

inline json topology_json(const Topology& topo) {
  json nodes = json::array();
  for (NodeId i = 0; i < static_cast<NodeId>(topo.node_count()); ++i) {
    const Node& n = topo.node(i);
    json jn{{"id", n.name}};
    if (n.coord) {
      jn["x"] = n.coord->x;
      jn["y"] = n.coord->y;
    }
    if (!topo.is_consumer(i)) jn["q"] = n.swap_prob;
    nodes.push_back(std::move(jn));
  }
  json edges = json::array();
  for (const Edge& e : topo.edges()) edges.push_back({topo.node(e.u).name, topo.node(e.v).name});
  return {{"format", kFormatVersion},
          {"nodes", std::move(nodes)},
          {"edges", std::move(edges)},
          {"alice", topo.node(topo.alice()).name},
          {"bob", topo.node(topo.bob()).name}};
}

inline json edge_json(const Topology& topo, EdgeId e) {
  const Edge& edge = topo.edge(e);
  return json::array({topo.node(edge.u).name, topo.node(edge.v).name});
}

inline json snapshot_json(const Snapshot& snap, const Topology& topo) {
  json links = json::array();
  for (EdgeId e = 0; e < static_cast<EdgeId>(snap.links.size()); ++e)
    if (!snap.links[e].empty()) links.push_back({{"edge", edge_json(topo, e)}, {"slots", snap.links[e]}});
  return {{"format", kFormatVersion},
          {"k", snap.k},
          {"p", snap.params.p},
          {"mu", detail::lifetime_json(snap.params.mu)},
          {"mode", std::string(to_string(snap.params.mode))},
          {"seed", snap.seed},
          {"links", std::move(links)}};
}

inline Snapshot parse_snapshot(std::string_view text, const Topology& topo) {
  const json doc = detail::parse_document(text);
  detail::check_format(doc);
  if (!doc.contains("k") || !doc["k"].is_number_integer() || doc["k"].get<int>() < 1)
    throw ParseError("k", "expected a positive integer");
  Snapshot snap = Snapshot::empty(topo, doc["k"].get<int>());
  snap.params.k = snap.k;
  if (doc.contains("p")) snap.params.p = detail::number(doc["p"], "p");
  if (doc.contains("mu")) snap.params.mu = detail::lifetime_value(doc["mu"], "mu");
  if (doc.contains("mode")) {
    if (!doc["mode"].is_string()) throw ParseError("mode", "expected a string");
    snap.params.mode = parse_decoherence_mode(doc["mode"].get<std::string>());
  }
  if (doc.contains("seed") && doc["seed"].is_number_unsigned()) snap.seed = doc["seed"].get<std::uint64_t>();
  if (!doc.contains("links") || !doc["links"].is_array()) throw ParseError("links", "expected an array");
  for (std::size_t i = 0; i < doc["links"].size(); ++i) {
    const std::string locus = "links[" + std::to_string(i) + "]";
    const json& jl = doc["links"][i];
    if (!jl.is_object() || !jl.contains("edge") || !jl.contains("slots"))
      throw ParseError(locus, "expected {\"edge\": [u, v], \"slots\": [...]}");
    const json& je = jl["edge"];
    if (!je.is_array() || je.size() != 2) throw ParseError(locus + ".edge", "expected a pair of node ids");
    const NodeId u = detail::lookup(topo, detail::node_id(je[0], locus + ".edge"), locus + ".edge");
    const NodeId v = detail::lookup(topo, detail::node_id(je[1], locus + ".edge"), locus + ".edge");
    auto e = topo.find_edge(u, v);
    if (!e) throw ParseError(locus + ".edge", "no such edge in the topology");
    auto& slots = snap.links[*e];
    if (!slots.empty()) throw ParseError(locus, "edge listed twice");
    if (!jl["slots"].is_array()) throw ParseError(locus + ".slots", "expected an array");
    for (const json& js : jl["slots"]) {
      if (!js.is_number_integer()) throw ParseError(locus + ".slots", "expected integer slots");
      const int t = js.get<int>();
      if (t < 1 || t > snap.k || (!slots.empty() && t <= slots.back()))
        throw ParseError(locus + ".slots", "slots must be strictly increasing within [1,k]");
      slots.push_back(t);
    }
  }
  return snap;
}

inline json endpoint_json(const LinkEndpoint& ep, const Topology& topo) {
  return {{"edge", edge_json(topo, ep.edge)}, {"slot", ep.slot}};
}

inline json plan_json(const SwapPlan& plan, const Topology& topo) {
  json out = json::array();
  for (NodeId n = 0; n < static_cast<NodeId>(plan.pairings.size()); ++n) {
    if (plan.pairings[n].empty()) continue;
    json pairs = json::array();
    for (const SwapPair& sp : plan.pairings[n])
      pairs.push_back(json::array({endpoint_json(sp.first, topo), endpoint_json(sp.second, topo)}));
    out.push_back({{"node", topo.node(n).name}, {"pairs", std::move(pairs)}});
  }
  return out;
}

inline json chains_json(const ChainSet& chains, const Topology& topo) {
  json list = json::array();
  for (const Chain& c : chains.chains) {
    json links = json::array();
    for (const LinkRef& l : c.links) links.push_back({{"edge", edge_json(topo, l.edge)}, {"slot", l.slot}});
    json swaps = json::array();
    for (NodeId n : c.swap_nodes) swaps.push_back(topo.node(n).name);
    list.push_back({{"links", std::move(links)}, {"swap_nodes", std::move(swaps)}, {"bsm_count", c.bsm_count()}});
  }
  return {{"chains", std::move(list)}, {"leftover_links", chains.leftover_links}};
}

// The six-node network: two disjoint three-hop routes A-2-1-B and A-3-4-B
// joined by a cross channel (2,3).
inline Topology six_node_base(double q = 1.0) {
  std::vector<Node> nodes{{"A", std::nullopt, 1.0}, {"1", std::nullopt, q}, {"2", std::nullopt, q},
                          {"3", std::nullopt, q},   {"4", std::nullopt, q}, {"B", std::nullopt, 1.0}};
  // A=0 1=1 2=2 3=3 4=4 B=5
  return Topology(std::move(nodes), {{0, 2}, {2, 1}, {1, 5}, {0, 3}, {3, 4}, {4, 5}, {2, 3}}, 0, 5);
}

// Eight-channel variant: routes A-2-1-B and A-4-3-B, cross channel (2,3) and
// a shortcut (A,3). Here a repeater-local choice can build A-2-3-B, which cuts
// both parallel routes.
inline Topology six_node_crossed(double q = 1.0) {
  std::vector<Node> nodes{{"A", std::nullopt, 1.0}, {"1", std::nullopt, q}, {"2", std::nullopt, q},
                          {"3", std::nullopt, q},   {"4", std::nullopt, q}, {"B", std::nullopt, 1.0}};
  return Topology(std::move(nodes), {{0, 2}, {2, 1}, {1, 5}, {0, 4}, {4, 3}, {3, 5}, {2, 3}, {0, 3}}, 0, 5);
}

inline Topology read_topology_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open topology file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_topology(ss.str());
}

namespace detail {

inline Coord parse_coord(std::string_view s, std::string_view spec) {
  const auto comma = s.find(',');
  if (comma == std::string_view::npos) throw UsageError("bad coordinate in '" + std::string(spec) + "'");
  try {
    return Coord{std::stoi(std::string(s.substr(0, comma))), std::stoi(std::string(s.substr(comma + 1)))};
  } catch (const std::exception&) {
    throw UsageError("bad coordinate in '" + std::string(spec) + "'");
  }
}

}  // namespace detail

// Named topologies:
//   grid21                   21x21 lattice, consumers (5,5) and (10,10)
//   grid:W,H:ax,ay:bx,by     custom lattice
//   sixnode-base | sixnode-no23 | sixnode-noA3
//   sixnode8-base | sixnode8-no23 | sixnode8-noA3
// Anything else is read as a topology file.
inline Topology resolve_topology(const std::string& ref) {
  if (ref == "grid21") return grid_topology(21, 21, {5, 5}, {10, 10});
  if (ref.rfind("grid:", 0) == 0) {
    std::vector<std::string_view> parts;
    std::string_view rest(ref);
    rest.remove_prefix(5);
    for (std::size_t pos; (pos = rest.find(':')) != std::string_view::npos; rest.remove_prefix(pos + 1))
      parts.push_back(rest.substr(0, pos));
    parts.push_back(rest);
    if (parts.size() != 3) throw UsageError("grid spec must look like grid:W,H:ax,ay:bx,by");
    const Coord dims = detail::parse_coord(parts[0], ref);
    return grid_topology(dims.x, dims.y, detail::parse_coord(parts[1], ref), detail::parse_coord(parts[2], ref));
  }
  if (ref == "sixnode-base") return six_node_base();
  if (ref == "sixnode-no23") return six_node_base().without_edge(2, 3);
  if (ref == "sixnode-noA3") return six_node_base().without_edge(0, 3);
  if (ref == "sixnode8-base") return six_node_crossed();
  if (ref == "sixnode8-no23") return six_node_crossed().without_edge(2, 3);
  if (ref == "sixnode8-noA3") return six_node_crossed().without_edge(0, 3);
  return read_topology_file(ref);
}

}  // namespace qroute::io

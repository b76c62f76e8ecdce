#pragma once

// External phase: k slots of per-edge link attempts followed by the
// step-function memory decoherence filter.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "qroute/errors.hpp"
#include "qroute/topology.hpp"

namespace qroute {

// per_qubit: each end of a link draws its own memory lifetime and the link
// survives only if both do. per_link: one lifetime per link.
enum class DecoherenceMode { per_qubit, per_link };

inline std::string_view to_string(DecoherenceMode m) {
  return m == DecoherenceMode::per_qubit ? "per_qubit" : "per_link";
}

inline DecoherenceMode parse_decoherence_mode(std::string_view s) {
  if (s == "per_qubit") return DecoherenceMode::per_qubit;
  if (s == "per_link") return DecoherenceMode::per_link;
  throw UsageError("unknown decoherence mode '" + std::string(s) + "'");
}

inline constexpr double kInfiniteLifetime = std::numeric_limits<double>::infinity();

struct LinkParams {
  double p = 1.0;
  int k = 1;
  double mu = kInfiniteLifetime;
  DecoherenceMode mode = DecoherenceMode::per_qubit;
  double tau = 1.0;  // slot duration; metadata only

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError("p must lie in [0,1]");
    if (k < 1) throw UsageError("k must be a positive integer");
    if (!(mu > 0.0)) throw UsageError("mu must be positive or inf");
  }
};

// Surviving links after the external phase: for each edge, the strictly
// increasing creation slots (1..k) of its links.
struct Snapshot {
  int k = 1;
  std::vector<std::vector<int>> links;
  LinkParams params;
  std::uint64_t seed = 0;

  std::size_t link_count() const {
    std::size_t n = 0;
    for (const auto& slots : links) n += slots.size();
    return n;
  }

  static Snapshot empty(const Topology& topo, int k) {
    Snapshot s;
    s.k = k;
    s.params.k = k;
    s.links.assign(topo.edge_count(), {});
    return s;
  }

  bool operator==(const Snapshot& o) const { return k == o.k && links == o.links; }
};

inline double survival_probability(int elapsed, double mu, DecoherenceMode mode) {
  if (elapsed < 0) throw UsageError("elapsed slots must be nonnegative");
  if (!(mu > 0.0)) throw UsageError("mu must be positive");
  if (elapsed == 0 || std::isinf(mu)) return 1.0;
  const double ends = mode == DecoherenceMode::per_qubit ? 2.0 : 1.0;
  return std::exp(-ends * elapsed / mu);
}

template <std::uniform_random_bit_generator G>
Snapshot generate_snapshot(const Topology& topo, const LinkParams& params, G& rng) {
  params.validate();
  Snapshot snap = Snapshot::empty(topo, params.k);
  snap.params = params;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const bool decoheres = !std::isinf(params.mu);
  std::exponential_distribution<double> lifetime(decoheres ? 1.0 / params.mu : 1.0);
  const int ends = params.mode == DecoherenceMode::per_qubit ? 2 : 1;

  for (auto& slots : snap.links) {
    for (int t = 1; t <= params.k; ++t) {
      if (!(unif(rng) < params.p)) continue;
      bool alive = true;
      if (decoheres) {
        const double needed = params.k - t;
        // Draw every lifetime so the stream layout does not depend on outcomes.
        for (int end = 0; end < ends; ++end)
          if (!(lifetime(rng) >= needed)) alive = false;
      }
      if (alive) slots.push_back(t);
    }
  }
  return snap;
}

}  // namespace qroute

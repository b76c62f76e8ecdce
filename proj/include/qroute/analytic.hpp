#pragma once

// Closed-form rates: effective link probability, the large-k rate bound and
// the exact rate of a deterministic-link repeater chain with finite memory.

#include <cmath>
#include <vector>

#include "qroute/errors.hpp"
#include "qroute/linkgen.hpp"
#include "qroute/topology.hpp"

namespace qroute {

// Probability that an edge holds at least one link after k slots.
inline double p_eff(double p, int k) {
  if (!(p >= 0.0 && p <= 1.0)) throw UsageError("p must lie in [0,1]");
  if (k < 1) throw UsageError("k must be a positive integer");
  return 1.0 - std::pow(1.0 - p, k);
}

// p * sum_i q^(m_i - 1) over the greedy edge-disjoint paths with hop lengths m_i.
inline double rate_bound_infinity(const Topology& topo, double p, double q) {
  if (!(p >= 0.0 && p <= 1.0)) throw UsageError("p must lie in [0,1]");
  if (!(q >= 0.0 && q <= 1.0)) throw UsageError("q must lie in [0,1]");
  double sum = 0.0;
  for (const Path& path : greedy_edge_disjoint_paths(topo).paths) sum += std::pow(q, path.hops() - 1);
  return p * sum;
}

struct ChainRateInput {
  int d = 1;  // edges in the chain; d - 1 repeaters
  double q = 1.0;
  int k = 1;
  double mu = kInfiniteLifetime;
  DecoherenceMode mode = DecoherenceMode::per_link;
};

// Distribution of the number of links from slots 1..k-1 of one edge that are
// still alive at slot k (independent, nonidentical Bernoullis).
inline std::vector<double> older_link_count_pmf(int k, double mu, DecoherenceMode mode) {
  std::vector<double> pmf{1.0};
  for (int slot = 1; slot < k; ++slot) {
    const double s = survival_probability(k - slot, mu, mode);
    std::vector<double> next(pmf.size() + 1, 0.0);
    for (std::size_t n = 0; n < pmf.size(); ++n) {
      next[n] += pmf[n] * (1.0 - s);
      next[n + 1] += pmf[n] * s;
    }
    pmf = std::move(next);
  }
  return pmf;
}

// Rate of a d-edge chain with p = 1: the always-present newest link on every
// edge gives one chain, plus M = min over edges of the surviving older links.
inline double chain_rate_p1(const ChainRateInput& in) {
  if (in.d < 1) throw UsageError("chain needs at least one edge");
  if (in.k < 1) throw UsageError("k must be a positive integer");
  if (!(in.q >= 0.0 && in.q <= 1.0)) throw UsageError("q must lie in [0,1]");
  if (!(in.mu > 0.0)) throw UsageError("mu must be positive or inf");

  const auto pmf = older_link_count_pmf(in.k, in.mu, in.mode);
  // E[M] = sum_{m>=1} P(N >= m)^d
  double expected_min = 0.0;
  double tail = 1.0;
  for (std::size_t m = 1; m < pmf.size(); ++m) {
    tail -= pmf[m - 1];
    expected_min += std::pow(std::max(tail, 0.0), in.d);
  }
  return std::pow(in.q, in.d - 1) / in.k * (1.0 + expected_min);
}

}  // namespace qroute

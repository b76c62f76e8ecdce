#pragma once

#include <cstdint>
#include <random>

namespace qroute {

using Rng = std::mt19937_64;

// Independent stream for one (master seed, parameter combination, trial)
// triple. Streams depend only on the triple, never on scheduling order.
inline Rng make_stream(std::uint64_t master, std::uint64_t combination, std::uint64_t trial) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(master), hi(master), lo(combination), hi(combination), lo(trial), hi(trial)};
  return Rng(seq);
}

}  // namespace qroute

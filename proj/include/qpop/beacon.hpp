#pragma once

#include <cstdint>

#include "qpop/hash.hpp"

namespace qpop {

// Trusted seeded randomness beacon: a PRF of (seed, epoch), visible to all
// parties, unpredictable before its epoch is queried.
struct BeaconState {
  Digest seed{};

  static BeaconState from_u64(uint64_t s);
};

Digest beacon_value(const BeaconState& state, uint64_t epoch);

// Uniform index in [0, len) from a beacon string, by rejection sampling on
// the PRF stream (no modulo bias).
uint64_t sample_index(const Digest& r, uint64_t len);

}  // namespace qpop

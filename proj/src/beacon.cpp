#include "qpop/beacon.hpp"

#include <stdexcept>

namespace qpop {

BeaconState BeaconState::from_u64(uint64_t s) {
  Enc e;
  e.str("beacon-seed").u64(s);
  return BeaconState{sha256(e)};
}

Digest beacon_value(const BeaconState& state, uint64_t epoch) {
  Enc e;
  e.str("beacon").bytes(state.seed).u64(epoch);
  return sha256(e);
}

uint64_t sample_index(const Digest& r, uint64_t len) {
  if (len == 0) throw std::invalid_argument("sample_index: len must be >= 1");
  if (len == 1) return 0;
  uint64_t limit = len * (UINT64_MAX / len);
  Digest cur = r;
  for (uint64_t round = 0;; round++) {
    for (int i = 0; i < 4; i++) {
      uint64_t w = get_u64be(cur.data() + 8 * i);
      if (w < limit) return w % len;
    }
    Enc e;
    e.str("beacon-ext").bytes(cur).u64(round);
    cur = sha256(e);
  }
}

}  // namespace qpop

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace qpop {

// Synchronous binary agreement for n >= 3f+1: f+1 phases of three rounds
// (value exchange, vote exchange, king tiebreak). Bits are 0/1; 2 encodes
// the "no value" vote; -1 encodes a dropped message.

inline uint64_t ba_num_phases(uint64_t f) { return f + 1; }
inline int ba_king_seat(uint64_t phase, uint64_t n) {
  return int((phase - 1) % n);
}

// Round 1 decision from bit counts: a value seen n-f times, else no value.
int ba_decide_d(uint64_t n, uint64_t f, uint64_t c0, uint64_t c1);

struct BaPre {
  int pre = 0;
  bool strong = false;
};

// Round 2 decision from vote counts: majority vote, strong at >= 2f+1.
BaPre ba_decide_pre(uint64_t n, uint64_t f, uint64_t e0, uint64_t e1);

// Round 3: keep a strong vote, otherwise adopt the king's (0 if silent).
int ba_next_bit(const BaPre& p, int king_value);

// Byzantine vote chooser: (seat, phase, round, to) -> 0/1/2 or -1 for silent.
using BaByzFn = std::function<int(int, uint64_t, int, int)>;
// Message tap: (phase, round, from, to, value).
using BaMsgFn = std::function<void(uint64_t, int, int, int, int)>;

struct BaSyncResult {
  std::vector<int> bits;  // per seat; Byzantine seats report their last honest-rule bit
  bool agreement = false; // all honest bits equal
  int decided = -1;       // the common honest bit when agreement holds
};

// Lock-step reference execution. initial[i] is seat i's input bit;
// byzantine[i] marks adversary seats whose outgoing values come from byz_fn.
BaSyncResult ba_run_sync(uint64_t n, uint64_t f, const std::vector<int>& initial,
                         const std::vector<bool>& byzantine,
                         const BaByzFn& byz_fn, const BaMsgFn& on_msg = {});

}  // namespace qpop

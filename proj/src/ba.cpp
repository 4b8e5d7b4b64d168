#include "qpop/ba.hpp"

namespace qpop {

int ba_decide_d(uint64_t n, uint64_t f, uint64_t c0, uint64_t c1) {
  if (c1 >= n - f) return 1;
  if (c0 >= n - f) return 0;
  return 2;
}

BaPre ba_decide_pre(uint64_t n, uint64_t f, uint64_t e0, uint64_t e1) {
  (void)n;
  BaPre p;
  p.pre = e1 > e0 ? 1 : 0;
  p.strong = (p.pre == 1 ? e1 : e0) >= 2 * f + 1;
  return p;
}

int ba_next_bit(const BaPre& p, int king_value) {
  if (p.strong) return p.pre;
  return king_value == 1 ? 1 : 0;
}

BaSyncResult ba_run_sync(uint64_t n, uint64_t f, const std::vector<int>& initial,
                         const std::vector<bool>& byzantine,
                         const BaByzFn& byz_fn, const BaMsgFn& on_msg) {
  std::vector<int> bits = initial;

  auto outgoing = [&](int from, uint64_t phase, int round, int to,
                      int honest_value) -> int {
    int v = honest_value;
    if (byzantine[from] && byz_fn) v = byz_fn(from, phase, round, to);
    if (on_msg && v >= 0) on_msg(phase, round, from, to, v);
    return v;
  };

  for (uint64_t phase = 1; phase <= ba_num_phases(f); phase++) {
    // Round 1: exchange current bits, derive d.
    std::vector<int> d(n);
    for (uint64_t i = 0; i < n; i++) {
      uint64_t c0 = 0, c1 = 0;
      for (uint64_t j = 0; j < n; j++) {
        int v = outgoing(int(j), phase, 1, int(i), bits[j]);
        if (v == 0) c0++;
        else if (v == 1) c1++;
      }
      d[i] = ba_decide_d(n, f, c0, c1);
    }
    // Round 2: exchange d, derive majority vote and strength.
    std::vector<BaPre> pre(n);
    for (uint64_t i = 0; i < n; i++) {
      uint64_t e0 = 0, e1 = 0;
      for (uint64_t j = 0; j < n; j++) {
        int v = outgoing(int(j), phase, 2, int(i), d[j]);
        if (v == 0) e0++;
        else if (v == 1) e1++;
      }
      pre[i] = ba_decide_pre(n, f, e0, e1);
    }
    // Round 3: the phase king broadcasts its vote.
    int king = ba_king_seat(phase, n);
    for (uint64_t i = 0; i < n; i++) {
      int kv = outgoing(king, phase, 3, int(i), pre[king].pre);
      bits[i] = ba_next_bit(pre[i], kv);
    }
  }

  BaSyncResult res;
  res.bits = bits;
  res.agreement = true;
  for (uint64_t i = 0; i < n; i++) {
    if (byzantine[i]) continue;
    if (res.decided < 0) res.decided = bits[i];
    else if (bits[i] != res.decided) res.agreement = false;
  }
  return res;
}

}  // namespace qpop

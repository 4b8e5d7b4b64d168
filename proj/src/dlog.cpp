#include "qpop/dlog.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "qpop/hash.hpp"

namespace qpop {

SolverBudget SolverBudget::for_window(double rate, double window_len) {
  SolverBudget b;
  b.rate = rate;
  b.remaining = uint64_t(std::floor(rate * window_len));
  return b;
}

SolverBudget SolverBudget::unlimited() {
  SolverBudget b;
  b.rate = 0;
  b.remaining = UINT64_MAX;
  return b;
}

PuzzleTarget puzzle_target(const Bytes& pk, uint64_t pos, const Bytes& r,
                           const GroupParams& gp) {
  Enc e;
  e.bytes(pk).u64(pos).bytes(r);
  Digest d = sha256(e);
  // Reduce the 256-bit digest mod p without bias concerns at desk scale:
  // fold big-endian words through the modulus.
  __uint128_t acc = 0;
  for (int i = 0; i < 4; i++) {
    acc = ((acc << 64) | get_u64be(d.data() + 8 * i)) % gp.p;
  }
  uint64_t h = uint64_t(acc);
  if (h == 0) h = 1;
  return PuzzleTarget{mulmod(h, h, gp.p)};
}

std::optional<PuzzleSolution> solve_dlog(const GroupParams& gp, PuzzleTarget h,
                                         SolverBudget& budget) {
  if (budget.remaining == 0) return std::nullopt;
  if (gp.q > (1ULL << 40)) {
    throw std::runtime_error("subgroup too large for desk-scale solver");
  }
  budget.remaining--;

  uint64_t m = uint64_t(std::ceil(std::sqrt(double(gp.q))));
  std::unordered_map<uint64_t, uint64_t> baby;
  baby.reserve(m * 2);
  uint64_t cur = 1;
  for (uint64_t j = 0; j < m; j++) {
    baby.emplace(cur, j);
    cur = mulmod(cur, gp.g, gp.p);
  }
  // g^{-m} = g^{q - (m mod q)}
  uint64_t factor = powmod(gp.g, gp.q - (m % gp.q), gp.p);
  uint64_t gamma = h.h % gp.p;
  for (uint64_t i = 0; i * m <= gp.q; i++) {
    auto it = baby.find(gamma);
    if (it != baby.end()) {
      uint64_t x = i * m + it->second;
      if (x < gp.q) return PuzzleSolution{x};
    }
    gamma = mulmod(gamma, factor, gp.p);
  }
  throw std::logic_error("dlog target outside the subgroup");
}

bool verify_dlog(const GroupParams& gp, PuzzleTarget h, PuzzleSolution x) {
  if (x.x >= gp.q) return false;
  if (h.h == 0 || h.h >= gp.p) return false;
  return powmod(gp.g, x.x, gp.p) == h.h;
}

}  // namespace qpop

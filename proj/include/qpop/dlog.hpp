#pragma once

#include <cstdint>
#include <optional>

#include "qpop/bytes.hpp"
#include "qpop/group.hpp"

namespace qpop {

struct PuzzleTarget {
  uint64_t h = 0;
};

struct PuzzleSolution {
  uint64_t x = 0;
};

// Rate-limited solving budget for one registration window.
struct SolverBudget {
  double rate = 0;
  uint64_t remaining = 0;

  static SolverBudget for_window(double rate, double window_len);
  static SolverBudget unlimited();
};

// h = (H(pk|pos|r) mod p, with 0 remapped to 1)^2 mod p.
PuzzleTarget puzzle_target(const Bytes& pk, uint64_t pos, const Bytes& r,
                           const GroupParams& gp);

// Unique x in [0, q) with g^x = h mod p, found by baby-step giant-step.
// Returns nullopt when the budget is exhausted.
std::optional<PuzzleSolution> solve_dlog(const GroupParams& gp, PuzzleTarget h,
                                         SolverBudget& budget);

bool verify_dlog(const GroupParams& gp, PuzzleTarget h, PuzzleSolution x);

}  // namespace qpop

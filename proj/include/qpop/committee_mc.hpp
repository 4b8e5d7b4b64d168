#pragma once

#include <cstdint>
#include <vector>

#include "qpop/beacon.hpp"
#include "qpop/event_log.hpp"
#include "qpop/rng.hpp"

namespace qpop {

// Committee evolution reduced to its sampling skeleton: one seat rotates per
// epoch and the incomer is Byzantine with probability rho, independently.
struct McParams {
  uint64_t n = 100;
  double rho = 0.15;
  uint64_t T = 1000;
  uint64_t trials = 1000;
  uint64_t seed = 0;
  double epsilon = 0.05;
  bool cap_genesis = true;  // resample genesis until f_1 < (1/3 - epsilon) n
};

struct McEstimate {
  uint64_t trials = 0;
  uint64_t violation_count = 0;  // trials where some f_t >= ceil(n/3)
  uint64_t steps_total = 0;
  uint64_t steps_violating = 0;
  double per_step_tail = 0;
  double wilson_upper_tail = 0;
  double chernoff_per_step = -1;  // -1 when the bound formula is undefined
  double union_bound = -1;
  double mean_f = 0;      // past the n-epoch warm-up
  double ci95_half = 0;   // over per-trial means
  uint64_t threshold = 0;

  Json to_json() const;
};

inline uint64_t violation_threshold(uint64_t n) { return (n + 2) / 3; }

McEstimate committee_mc(const McParams& p);         // parallel kernel
McEstimate committee_mc_serial(const McParams& p);  // full-recount reference

// exp(n (1-3 rho) ln(3 rho) / 6); requires 0 < rho < 1/3.
double chernoff_bound(uint64_t n, double rho);

double wilson_upper95(uint64_t k, uint64_t n);

// P[Bin(n, rho) >= k] by direct long double summation.
long double tail_exact(uint64_t n, double rho, uint64_t k);

// Importance-sampled tail estimate with a distribution-free 95% upper
// confidence limit; usable orders of magnitude below 1/samples.
struct TailEstimate {
  double p_hat = 0;
  double ucl95 = 0;
  uint64_t samples = 0;
};
TailEstimate tail_importance(uint64_t n, double rho, uint64_t k,
                             uint64_t samples, uint64_t seed);

// The full simulator's committee trajectory under honest-only behavior,
// reduced to beacon sampling over a fixed cell registry. Index 0 is genesis.
std::vector<uint64_t> projection_trajectory(
    const std::vector<uint8_t>& genesis_byz,
    const std::vector<uint8_t>& cell_byz, const BeaconState& beacon,
    uint64_t epochs);

}  // namespace qpop

#pragma once

#include <cstdint>

namespace qpop {

// Safe-prime group: p = 2q+1, g generates the order-q subgroup of
// quadratic residues mod p.
struct GroupParams {
  uint64_t p = 0;
  uint64_t q = 0;
  uint64_t g = 0;
  int bits = 0;
};

uint64_t mulmod(uint64_t a, uint64_t b, uint64_t m);
uint64_t powmod(uint64_t base, uint64_t exp, uint64_t m);
bool is_prime_u64(uint64_t n);

GroupParams derive_group_small();
GroupParams derive_group_medium();
// Throws std::invalid_argument on any parameter violation.
GroupParams derive_group_custom(uint64_t p, uint64_t q, uint64_t g);

bool in_qr_subgroup(const GroupParams& gp, uint64_t h);

}  // namespace qpop

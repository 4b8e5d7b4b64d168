#include "qpop/group.hpp"

#include <bit>
#include <stdexcept>

namespace qpop {

uint64_t mulmod(uint64_t a, uint64_t b, uint64_t m) {
  return uint64_t((__uint128_t(a) * b) % m);
}

uint64_t powmod(uint64_t base, uint64_t exp, uint64_t m) {
  if (m == 1) return 0;
  uint64_t result = 1;
  base %= m;
  while (exp > 0) {
    if (exp & 1) result = mulmod(result, base, m);
    base = mulmod(base, base, m);
    exp >>= 1;
  }
  return result;
}

// Deterministic Miller-Rabin, valid for all n < 2^64.
bool is_prime_u64(uint64_t n) {
  if (n < 2) return false;
  for (uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL,
                     23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  uint64_t d = n - 1;
  int r = std::countr_zero(d);
  d >>= r;
  for (uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL,
                     23ULL, 29ULL, 31ULL, 37ULL}) {
    uint64_t x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < r; i++) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

GroupParams derive_group_custom(uint64_t p, uint64_t q, uint64_t g) {
  if (!is_prime_u64(p)) throw std::invalid_argument("p is not prime");
  if (!is_prime_u64(q)) throw std::invalid_argument("q is not prime");
  if (q > (UINT64_MAX - 1) / 2 || p != 2 * q + 1) {
    throw std::invalid_argument("p != 2q + 1");
  }
  uint64_t gm = g % p;
  if (gm <= 1) throw std::invalid_argument("g must not be 0 or 1 mod p");
  if (powmod(gm, q, p) != 1) {
    throw std::invalid_argument("g does not generate the order-q subgroup");
  }
  GroupParams gp;
  gp.p = p;
  gp.q = q;
  gp.g = gm;
  gp.bits = 64 - std::countl_zero(p);
  return gp;
}

GroupParams derive_group_small() { return derive_group_custom(23, 11, 2); }
GroupParams derive_group_medium() { return derive_group_custom(47, 23, 2); }

bool in_qr_subgroup(const GroupParams& gp, uint64_t h) {
  if (h == 0 || h >= gp.p) return false;
  return powmod(h, gp.q, gp.p) == 1;
}

}  // namespace qpop

#pragma once

#include <cstdint>
#include <string_view>

#include "qpop/hash.hpp"

namespace qpop {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256** by Blackman and Vigna.
class Xoshiro256ss {
 public:
  static Xoshiro256ss from_seed(uint64_t seed) {
    Xoshiro256ss r;
    for (auto& w : r.s_) w = splitmix64(seed);
    return r;
  }

  static Xoshiro256ss from_digest(const Digest& d) {
    Xoshiro256ss r;
    bool nonzero = false;
    for (int i = 0; i < 4; i++) {
      r.s_[i] = get_u64be(d.data() + 8 * i);
      nonzero |= r.s_[i] != 0;
    }
    if (!nonzero) r.s_[0] = 1;
    return r;
  }

  uint64_t next() {
    uint64_t result = rotl(s_[1] * 5, 7) * 9;
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 bits.
  double unit() { return double(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return unit() < p; }

  // Uniform in [0, n) without modulo bias.
  uint64_t below(uint64_t n) {
    uint64_t limit = n * (UINT64_MAX / n);
    for (;;) {
      uint64_t x = next();
      if (x < limit) return x % n;
    }
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

 private:
  uint64_t s_[4] = {};
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
};

// Named, independent substream of a master seed.
inline Xoshiro256ss rng_substream(uint64_t master, std::string_view label,
                                  uint64_t id = 0) {
  Enc e;
  e.str("rng").u64(master).str(label).u64(id);
  return Xoshiro256ss::from_digest(sha256(e));
}

}  // namespace qpop

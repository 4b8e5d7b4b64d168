#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace qpop {

using Bytes = std::vector<uint8_t>;

inline Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

inline std::string hex(const uint8_t* p, size_t n) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(2 * n);
  for (size_t i = 0; i < n; i++) {
    out.push_back(digits[p[i] >> 4]);
    out.push_back(digits[p[i] & 0xf]);
  }
  return out;
}

inline std::string hex(const Bytes& b) { return hex(b.data(), b.size()); }

inline void put_u32be(Bytes& out, uint32_t v) {
  out.push_back(uint8_t(v >> 24));
  out.push_back(uint8_t(v >> 16));
  out.push_back(uint8_t(v >> 8));
  out.push_back(uint8_t(v));
}

inline void put_u64be(Bytes& out, uint64_t v) {
  put_u32be(out, uint32_t(v >> 32));
  put_u32be(out, uint32_t(v));
}

inline uint64_t get_u64be(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; i++) v = (v << 8) | p[i];
  return v;
}

// Canonical encoding: every field is a 4-byte big-endian length prefix
// followed by the field bytes; integers are encoded as 8-byte big-endian
// fields. Unambiguous under concatenation.
struct Enc {
  Bytes out;

  Enc& bytes(const uint8_t* p, size_t n) {
    put_u32be(out, uint32_t(n));
    out.insert(out.end(), p, p + n);
    return *this;
  }
  Enc& bytes(const Bytes& b) { return bytes(b.data(), b.size()); }
  template <size_t N>
  Enc& bytes(const std::array<uint8_t, N>& a) { return bytes(a.data(), N); }
  Enc& str(std::string_view s) {
    return bytes(reinterpret_cast<const uint8_t*>(s.data()), s.size());
  }
  Enc& u64(uint64_t v) {
    Bytes f;
    put_u64be(f, v);
    return bytes(f);
  }
};

}  // namespace qpop

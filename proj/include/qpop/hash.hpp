#pragma once

#include <array>
#include <cstdint>

#include "qpop/bytes.hpp"

namespace qpop {

using Digest = std::array<uint8_t, 32>;

Digest sha256(const uint8_t* p, size_t n);

inline Digest sha256(const Bytes& b) { return sha256(b.data(), b.size()); }
inline Digest sha256(const Enc& e) { return sha256(e.out); }

inline std::string hex(const Digest& d) { return hex(d.data(), d.size()); }

inline Bytes digest_bytes(const Digest& d) { return Bytes(d.begin(), d.end()); }

inline uint64_t digest_u64(const Digest& d) { return get_u64be(d.data()); }

}  // namespace qpop

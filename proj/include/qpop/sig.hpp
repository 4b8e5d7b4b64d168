#pragma once

#include "qpop/bytes.hpp"
#include "qpop/hash.hpp"

namespace qpop {

// Ed25519. Keys are raw 32-byte strings; signatures are 64 bytes.
struct KeyPair {
  Bytes pk;
  Bytes sk;  // 32-byte seed form
};

KeyPair keygen(const Digest& seed);
Bytes sign(const Bytes& sk, const Bytes& msg);
bool verify(const Bytes& pk, const Bytes& msg, const Bytes& sig);

}  // namespace qpop

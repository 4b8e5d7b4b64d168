#include "qpop/hash.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace qpop {

Digest sha256(const uint8_t* p, size_t n) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(p, n, out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size()) {
    throw std::runtime_error("sha256 failed");
  }
  return out;
}

}  // namespace qpop

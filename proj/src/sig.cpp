#include "qpop/sig.hpp"

#include <openssl/evp.h>

#include <memory>
#include <stdexcept>

namespace qpop {

namespace {

struct PkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct CtxDeleter {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using CtxPtr = std::unique_ptr<EVP_MD_CTX, CtxDeleter>;

}  // namespace

KeyPair keygen(const Digest& seed) {
  PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr,
                                           seed.data(), seed.size()));
  if (!key) throw std::runtime_error("ed25519 keygen failed");
  KeyPair kp;
  kp.sk.assign(seed.begin(), seed.end());
  size_t pklen = 32;
  kp.pk.resize(pklen);
  if (EVP_PKEY_get_raw_public_key(key.get(), kp.pk.data(), &pklen) != 1 ||
      pklen != 32) {
    throw std::runtime_error("ed25519 public key extraction failed");
  }
  return kp;
}

Bytes sign(const Bytes& sk, const Bytes& msg) {
  PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, sk.data(),
                                           sk.size()));
  if (!key) throw std::runtime_error("ed25519 bad signing key");
  CtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr,
                                 key.get()) != 1) {
    throw std::runtime_error("ed25519 sign init failed");
  }
  Bytes sig(64);
  size_t siglen = sig.size();
  if (EVP_DigestSign(ctx.get(), sig.data(), &siglen, msg.data(), msg.size()) !=
          1 ||
      siglen != 64) {
    throw std::runtime_error("ed25519 sign failed");
  }
  return sig;
}

bool verify(const Bytes& pk, const Bytes& msg, const Bytes& sig) {
  if (pk.size() != 32 || sig.size() != 64) return false;
  PkeyPtr key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, pk.data(),
                                          pk.size()));
  if (!key) return false;
  CtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr,
                                   key.get()) != 1) {
    return false;
  }
  return EVP_DigestVerify(ctx.get(), sig.data(), sig.size(), msg.data(),
                          msg.size()) == 1;
}

}  // namespace qpop

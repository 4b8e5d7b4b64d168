#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qpop/rng.hpp"
#include "qpop/sig.hpp"
#include "qpop/simnet.hpp"

namespace qpop {

// Fixed partition of the 1-D space into cells of size gamma.
struct Partition {
  double gamma = 1.0;
  double line_length = 16.0;
  uint64_t cell_count = 16;

  static Partition make(double gamma, double line_length);
  uint64_t cell_of(double x) const { return uint64_t(std::floor(x / gamma)); }
  double center(uint64_t i) const { return (double(i) + 0.5) * gamma; }
};

// The off-chain scarce resource: a quantum computer at a cell center.
struct QuantumDevice {
  uint64_t id = 0;
  std::string owner;
  uint64_t cell = 0;
  bool online = true;
  double poq_time = 0.01;  // actual proof-of-quantumness compute time
};

struct DeviceRegistry {
  std::vector<QuantumDevice> devices;

  const QuantumDevice* online_device(const std::string& owner,
                                     uint64_t cell) const {
    for (const auto& d : devices) {
      if (d.online && d.owner == owner && d.cell == cell) return &d;
    }
    return nullptr;
  }
};

// Binds registered public keys to their owner and signing key. The signing
// key may deliberately mismatch the public key in adversarial scenarios.
struct Keyring {
  struct Entry {
    std::string owner;
    Bytes sk;
  };
  std::unordered_map<std::string, Entry> by_pk;

  void bind(const Bytes& pk, std::string owner, Bytes sk) {
    by_pk[hex(pk)] = Entry{std::move(owner), std::move(sk)};
  }
  const Entry* find(const Bytes& pk) const {
    auto it = by_pk.find(hex(pk));
    return it == by_pk.end() ? nullptr : &it->second;
  }
};

struct CvpvConfig {
  double lambda = 10;
  double break_prob = -1;  // negative means 2^-lambda
  double epsilon_slack = 0;
  double verifier_offset = 0.25;  // d_v, transceiver distance from cell center
  double honest_fail_prob = 0;
  double poq_time = 0.01;  // protocol-nominal compute time

  double effective_break_prob() const {
    return break_prob >= 0 ? break_prob : std::exp2(-lambda);
  }
};

struct CvpvOutcome {
  bool accepted = false;
  std::string reason;
  Json transcript;  // filled only when a log is attached
};

// Challenges from transceivers at cell_center +- d_v meet the center at t_c;
// the response must be back at both transceivers by the deadline.
SimTime response_deadline(SimTime t_c, const CvpvConfig& cfg,
                          const NetworkConfig& net);

// One verifier instance for a claimed (cell, pk). Honest case requires an
// online device of pk's owner in the claimed cell and responses signed by pk;
// the attack case succeeds only with probability break_prob.
CvpvOutcome run_cvpv_instance(uint64_t claimed_cell, const Bytes& pk,
                              const DeviceRegistry& devices,
                              const Keyring& keyring, const CvpvConfig& cfg,
                              const Partition& part, const NetworkConfig& net,
                              SimTime t_start, Xoshiro256ss& rng,
                              EventLog* log);

}  // namespace qpop
